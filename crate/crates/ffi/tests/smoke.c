#include <stdio.h>
#include "deadcore.h"

int main(void) {
    DcProblemDesc d = {0.0, 2.0, 99, 0.0, 0.5, DC_OPERATOR_LAPLACIAN, 1.0, 1.0, 2.0,
                       DC_WEIGHT_SIN_SPLIT, 0.5, 1.0};
    DcProblem *p = NULL;
    DcField *u = NULL;
    DcSolveReport rep;
    DcClassification c;
    double buf[101];
    size_t len = 0;

    if (dc_problem_new_1d(&d, &p) != DC_STATUS_OK) {
        fprintf(stderr, "%s\n", dc_last_error_message());
        return 1;
    }
    if (dc_solve(p, NULL, &u, &rep) != DC_STATUS_OK || dc_classify(u, &c) != DC_STATUS_OK) {
        dc_problem_free(p);
        return 1;
    }
    dc_field_values(u, buf, sizeof buf / sizeof buf[0], &len);
    printf("deadcore %s: verdict %d, max %g, %zu nodes\n", dc_version(), (int)c.verdict, rep.sup_norm, len);
    dc_field_free(u);
    dc_problem_free(p);
    return 0;
}
