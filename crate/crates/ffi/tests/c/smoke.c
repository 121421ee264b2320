#include <math.h>
#include <stdio.h>
#include "qcurv.h"

/* Round sphere in four dimensions: R = 48 and Q2 = 8 everywhere. */
int main(void) {
    QcField *f = NULL;
    if (qc_field_from_density(4, "[[bumps]]\nprofile = \"spheredensity\"\n", &f) != QC_STATUS_OK) {
        fprintf(stderr, "build: %s\n", qc_last_error());
        return 1;
    }
    double x[4] = {0.3, -0.2, 0.1, 0.5};
    QcCurvature c;
    double eigs[4];
    if (qc_curvature(f, x, 4, &c, eigs) != QC_STATUS_OK) {
        fprintf(stderr, "curvature: %s\n", qc_last_error());
        return 1;
    }
    if (fabs(c.scalar - 48.0) > 1e-6 || fabs(c.q2 - 8.0) > 1e-6 || !isnan(c.q4)) {
        fprintf(stderr, "unexpected R=%g Q2=%g\n", c.scalar, c.q2);
        return 1;
    }
    if (qc_eval_u(f, x, 3, eigs) != QC_STATUS_DIMENSION_MISMATCH) {
        return 1;
    }
    qc_field_free(f);
    printf("ok %s\n", qc_version());
    return 0;
}
