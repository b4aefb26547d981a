#include <math.h>
#include <stdio.h>
#include "doppler_cloak.h"

#define CHECK(call)                                                   \
    do {                                                              \
        enum DcStatus s_ = (call);                                    \
        if (s_ != DC_STATUS_OK) {                                     \
            char msg_[256];                                           \
            dc_last_error(msg_, sizeof msg_);                         \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, msg_);  \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    double cv = 0.0;
    CHECK(dc_rectifying_capacitance(50.0, 1e-7, 1e-13, 1.5e9, &cv));
    double lag = 0.0;
    CHECK(dc_phase_shift(50.0, 1e-7, 1e-13, cv, 1.5e9, &lag));
    if (fabs(lag - M_PI / 4) > 1e-9) return 2;

    double caps[3] = {0.0, 1e-12, 2e-12};
    double freqs[2] = {1.4e9, 1.5e9};
    DcPhaseMap *map = NULL;
    CHECK(dc_phase_map_dipole(50.0, 1e-7, 1e-13, caps, 3, freqs, 2, &map));
    size_t nc = 0, nf = 0;
    CHECK(dc_phase_map_shape(map, &nc, &nf));
    dc_phase_map_free(map);
    if (nc != 3 || nf != 2) return 3;

    if (dc_phase_map_shape(NULL, &nc, &nf) != DC_STATUS_NULL_POINTER) return 4;
    printf("smoke ok %.6e\n", cv);
    return 0;
}
