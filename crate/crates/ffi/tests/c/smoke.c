#include <stdio.h>
#include <stdlib.h>

#include "infoeff.h"

int main(void) {
    double x[] = {4, 7, 9, 10, 6, 11, 3};
    double h, c;
    if (ie_ordinal_measures(x, 7, 3, &h, &c) != IE_STATUS_OK) {
        return 1;
    }
    printf("H=%.6f C=%.6f\n", h, c);

    IeConfig cfg = ie_config_default();
    cfg.window = 120;
    cfg.embedding_dim = 3;
    cfg.efficiency_window = 30;
    size_t n = 400;
    double *r = malloc(n * sizeof *r);
    unsigned long long s = 88172645463325252ULL;
    for (size_t i = 0; i < n; i++) {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        r[i] = (double)(s >> 11) / 9007199254740992.0 - 0.5;
    }
    IeTrack *track = NULL;
    IeStatus st = ie_track_analyze(&cfg, r, n, &track);
    free(r);
    if (st != IE_STATUS_OK) {
        char msg[256];
        ie_last_error_message(msg, sizeof msg);
        fprintf(stderr, "analyze failed: %s\n", msg);
        return 2;
    }
    double e;
    ie_track_efficiency(track, &e);
    printf("E=%.4f\n", e);
    ie_track_free(track);
    return 0;
}
