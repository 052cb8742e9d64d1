#include <math.h>
#include <stdio.h>

#include "membrane_lab.h"

int main(void) {
    int64_t lo[5] = {0, 0, 0, 0, 0};
    MlWindow *w = NULL;
    MlPins *a = NULL;
    double g = 0.0;
    if (ml_window_new(5, lo, lo, &w) != ML_STATUS_OK) return 1;
    if (ml_pins_new(w, &a) != ML_STATUS_OK) return 2;
    if (ml_green_column(a, lo, &g, 1) != ML_STATUS_OK) return 3;
    if (fabs(g - 10.0 / 11.0) > 1e-14) return 4;
    ml_pins_set(a, lo, true);
    if (ml_green_column(a, lo, &g, 1) != ML_STATUS_NOT_FREE) return 5;
    printf("%s\n", ml_last_error());
    ml_pins_free(a);
    ml_window_free(w);
    return 0;
}
