#include <math.h>
#include <stdio.h>

#include "fbcsf.h"

static int fail(const char *what) {
    char msg[256];
    fbcsf_last_error(msg, sizeof msg);
    fprintf(stderr, "%s: %s\n", what, msg);
    return 1;
}

int main(void) {
    FbcsfSurface *disk = NULL;
    FbcsfChord *diameter = NULL;
    double lambda[3];
    size_t index = 0, nullity = 0;

    if (fbcsf_surface_preset("flat-disk", 0.0, 0.0, &disk) != FBCSF_STATUS_OK) return fail("preset");
    if (fbcsf_chord_line(disk, 1.5707963267948966, 0.0, 256, &diameter) != FBCSF_STATUS_OK) return fail("line");
    if (fbcsf_robin_spectrum(disk, diameter, 3, lambda, &index, &nullity) != FBCSF_STATUS_OK) return fail("spectrum");
    printf("%.10f %.10f %.10f %zu %zu\n", lambda[0], lambda[1], lambda[2], index, nullity);
    if (fabs(lambda[0] + 1.43923) > 1e-4 || index != 1 || nullity != 1) return 2;

    FbcsfSurface *bad = NULL;
    if (fbcsf_surface_preset("no-such-surface", 0.0, 0.0, &bad) != FBCSF_STATUS_CONFIG) return 3;
    if (fbcsf_last_error(NULL, 0) == 0) return 4;

    fbcsf_chord_free(diameter);
    fbcsf_surface_free(disk);
    printf("version %s\n", fbcsf_version());
    return 0;
}
