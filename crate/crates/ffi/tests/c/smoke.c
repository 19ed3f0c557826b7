#include <stdio.h>
#include <string.h>

#include "pendency.h"

int main(int argc, char **argv) {
    if (argc != 2) {
        return 64;
    }
    PdModel *model = NULL;
    if (pd_model_load_file(argv[1], &model) != PD_STATUS_OK) {
        char *msg = pd_last_error();
        fprintf(stderr, "load failed: %s\n", msg ? msg : "?");
        pd_string_free(msg);
        return 1;
    }
    size_t d = 0, k = 0;
    pd_model_n_features(model, &d);
    pd_model_n_classes(model, &k);
    double row[16] = {0};
    double probs[16] = {0};
    if (d > 16 || k > 16 || pd_model_predict_proba(model, row, 1, d, probs, k) != PD_STATUS_OK) {
        pd_model_free(model);
        return 2;
    }
    double bad_out[1];
    PdStatus s = pd_model_predict_proba(model, row, 1, d + 1, bad_out, 1);
    pd_model_free(model);
    if (s != PD_STATUS_SHAPE_MISMATCH) {
        return 3;
    }
    printf("%zu %zu", d, k);
    for (size_t i = 0; i < k; i++) {
        printf(" %.17g", probs[i]);
    }
    printf("\n");
    return 0;
}
