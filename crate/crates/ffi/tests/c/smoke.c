#include <math.h>
#include <stdio.h>
#include "meandist.h"

int main(void) {
    const char *json =
        "{\"vertices\": [\"a\"], \"edges\": [{\"id\": \"p\", \"u\": \"a\", \"v\": \"a\", \"length\": 0.5},"
        " {\"id\": \"q\", \"u\": \"a\", \"v\": \"a\", \"length\": 0.5}]}";
    MdGraph *g = NULL;
    if (md_graph_from_json(json, &g) != MD_STATUS_OK) {
        fprintf(stderr, "load: %s\n", md_last_error_message());
        return 1;
    }
    double rho = 0, diam = 0, mu = 0, err = 0;
    if (md_rho(g, &rho) || md_diameter(g, &diam) || md_spectral_gap(g, 1e-6, &mu, &err)) {
        fprintf(stderr, "compute: %s\n", md_last_error_message());
        return 1;
    }
    double d = 0;
    MdStatus bad = md_point_distance(g, "p:0.1", "zz:0.2", &d);
    printf("%.17g %.17g %.17g %d\n", rho, diam, mu, (int)bad);
    md_graph_free(g);
    if (fabs(rho - 0.1875) > 1e-12 || fabs(diam - 0.5) > 1e-12) return 2;
    if (fabs(mu - 4 * M_PI * M_PI) > 1e-4 * mu) return 3;
    if (bad != MD_STATUS_UNKNOWN_ID) return 4;
    return 0;
}
