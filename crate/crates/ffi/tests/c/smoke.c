#include <math.h>
#include <stdio.h>
#include <string.h>

#include "robustrisk.h"

#define CHECK(cond)                                                    \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond,   \
              rr_last_error_message());                                \
      return 1;                                                        \
    }                                                                  \
  } while (0)

int main(void) {
  RrLoss loss;
  double v;
  CHECK(rr_loss_parse("huber:1.345", &loss) == RR_STATUS_OK);
  CHECK(loss.kind == RR_LOSS_KIND_HUBER);
  CHECK(rr_loss_lipschitz_constant(loss, &v) == RR_STATUS_OK && v == 1.345);

  RrLoss ls = {RR_LOSS_KIND_LEAST_SQUARES, 1.0};
  CHECK(rr_loss_lipschitz_constant(ls, &v) == RR_STATUS_NOT_LIPSCHITZ);
  CHECK(strlen(rr_last_error_message()) > 0);

  RrNetwork *oracle = NULL;
  CHECK(rr_network_zeros("2:3", 1.0, &oracle) == RR_STATUS_OK);
  RrContamination cfg = {1.0, 0.1, 1.0, 0.5};
  RrDataset *data = NULL;
  CHECK(rr_dataset_sample(&cfg, oracle, 50, 7, &data) == RR_STATUS_OK);
  CHECK(rr_dataset_len(data) == 50 && rr_dataset_dim(data) == 2);

  RrTrainOptions opts = rr_train_options_default();
  opts.iterations = 20;
  RrNetwork *net = NULL;
  double risk = -1.0;
  CHECK(rr_train(data, loss, "2:3", 1.0, &opts, &net, &risk) == RR_STATUS_OK);
  CHECK(risk >= 0.0);
  double x[2] = {0.5, -1.0};
  CHECK(rr_network_forward(net, x, 2, &v) == RR_STATUS_OK && isfinite(v));
  CHECK(rr_network_forward(net, x, 3, &v) == RR_STATUS_SHAPE);

  char *json = NULL;
  CHECK(rr_network_to_json(net, &json) == RR_STATUS_OK);
  RrNetwork *copy = NULL;
  CHECK(rr_network_from_json(json, &copy) == RR_STATUS_OK);
  rr_string_free(json);

  RrBoundInputs in = {0};
  in.c_h = 1.0;
  in.c_f = 1.0;
  in.n = 1;
  in.t = 0.5;
  in.l = 1;
  in.a_constant = rr_default_a_constant();
  RrBoundReport rep;
  CHECK(rr_bound_report(&in, &rep) == RR_STATUS_OK && rep.theorem1_rhs == 16.0);
  CHECK(isnan(rep.theorem3_first_rhs));

  CHECK(rr_network_forward(NULL, x, 2, &v) == RR_STATUS_NULL_POINTER);

  rr_network_free(copy);
  rr_network_free(net);
  rr_network_free(oracle);
  rr_dataset_free(data);
  puts("ok");
  return 0;
}
