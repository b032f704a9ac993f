#include <stdio.h>
#include "dmlab.h"

int main(void) {
    DmlabFamily *fam = NULL;
    if (dmlab_family_builtin("ex_first", &fam) != DMLAB_STATUS_OK) return 1;
    double v = 0.0;
    if (dmlab_functional_value(fam, 64, "one", "one", "one", 1.0, &v) != DMLAB_STATUS_OK) return 2;
    dmlab_family_free(fam);
    if (dmlab_family_builtin("nope", &fam) != DMLAB_STATUS_UNKNOWN_NAME) return 3;
    printf("%.17g %s\n", v, dmlab_last_error());
    return 0;
}
