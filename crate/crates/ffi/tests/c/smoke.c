#include <math.h>
#include <stdio.h>
#include "lrinv.h"

int main(void) {
    LrinvModel *model = NULL;
    LrinvRho *rho = NULL;
    LrinvFrame *frame = NULL;
    if (lrinv_model_from_preset("ck-reference", &model) != LRINV_STATUS_OK) return 1;
    if (lrinv_rho_new(model, 0.0, 1.0, &rho) != LRINV_STATUS_OK) return 2;
    double r = 0.0, rd = 0.0;
    if (lrinv_rho_eval(rho, 0.0, &r, &rd) != LRINV_STATUS_OK) return 3;
    LrinvGrid grid = { -10.0, 10.0, 401, 2 };
    if (lrinv_frame_gaussian(grid, 0.0, 0.0, 1.0, 0.0, &frame) != LRINV_STATUS_OK) return 4;
    if (lrinv_frame_len(frame) != 401) return 5;
    if (fabs(lrinv_frame_norm_sq(frame) - 1.0) > 1e-12) return 6;
    if (lrinv_model_from_preset("missing", &model) != LRINV_STATUS_CONFIG) return 7;
    char msg[256];
    if (lrinv_last_error_message(msg, sizeof msg) == 0) return 8;
    printf("%s %.17g %.17g\n", lrinv_version(), r, rd);
    lrinv_frame_free(frame);
    lrinv_rho_free(rho);
    lrinv_model_free(model);
    return 0;
}
