#include <math.h>
#include <stdio.h>
#include "pcfpair.h"

int main(void) {
    PcfDispersionModel *model = NULL;
    if (pcf_model_default(&model) != PCF_STATUS_OK) return 1;
    double zdw = 0.0;
    if (pcf_model_zdw(model, &zdw) != PCF_STATUS_OK) return 2;
    if (fabs(zdw - 760.0) > 0.1) return 3;

    PcfFwmConfig config = pcf_fwm_config_default();
    double ls[4], li[4];
    size_t n = 0;
    if (pcf_branch_solutions(model, config, ls, li, 4, &n) != PCF_STATUS_OK || n != 1) return 4;
    pcf_model_free(model);

    double bad = 0.0;
    if (pcf_attenuation_length(-1.0, &bad) != PCF_STATUS_ERR_INVALID) return 5;
    char msg[256];
    if (pcf_last_error_message(msg, sizeof msg) == 0) return 6;

    printf("zdw %.3f signal %.3f idler %.3f\n", zdw, ls[0], li[0]);
    return 0;
}
