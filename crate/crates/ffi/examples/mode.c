/* Build: cargo build -p stpg-ffi --release
 *        cc -I crates/ffi/include crates/ffi/examples/mode.c target/release/libstpg_ffi.a -lm -lpthread -ldl -o mode */
#include <math.h>
#include <stdio.h>
#include "stpg.h"

int main(void) {
    StpgDiscretization *d = NULL;
    StpgStatus st = stpg_discretization_new(1, 8, 1, 32, 1.0, &d);
    if (st != STPG_STATUS_OK) {
        char msg[256];
        stpg_last_error_message(msg, sizeof msg);
        fprintf(stderr, "%s: %s\n", stpg_status_name(st), msg);
        return 1;
    }
    double y, c_s, c_w, lo, hi, p;
    stpg_solve_mode(d, 1.0, 1.0, NULL, 0, &y);
    stpg_cfl_constants(d, 1.0, &c_s, &c_w);
    stpg_infsup(d, 1.0, 1, 5000, &lo, &hi);
    stpg_predict_max_moment(INFINITY, INFINITY, 3.5, &p);
    printf("|U|_Y = %.6f  c_S = %.4f  c_S,w = %.4f  inf-sup = [%.12f, %.12f]  p* = %g\n", y, c_s, c_w, lo, hi, p);
    stpg_discretization_free(d);
    return 0;
}
