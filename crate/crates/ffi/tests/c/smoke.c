#include <math.h>
#include <stdio.h>
#include "hawkes_queue.h"

int main(void) {
    HqModel *m = NULL;
    if (hq_model_new_erlang(1.0, 0.5, 0.75, 1.0, 1, 1.0, &m) != HQ_STATUS_OK) return 1;
    double mean, cov_lq, var;
    if (hq_steady_state(m, &mean, &cov_lq, &var) != HQ_STATUS_OK) return 2;
    if (fabs(mean - 3.0) > 1e-9 || fabs(cov_lq - 2.4) > 1e-9 || fabs(var - 5.4) > 1e-9) return 3;
    hq_model_free(m);

    HqModel *bad = NULL;
    if (hq_model_new_erlang(1.0, 0.5, 0.75, 1.0, 1, -1.0, &bad) != HQ_STATUS_INVALID_ARGUMENT) return 4;
    if (bad != NULL || hq_last_error() == NULL) return 5;
    printf("%.6f %.6f %.6f\n", mean, cov_lq, var);
    return 0;
}
