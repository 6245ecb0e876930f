/* Drives the C API end to end; exits nonzero on the first problem. */
#include <stdio.h>
#include <string.h>

#include "blindbeam.h"

#define CHECK(call)                                                       \
    do {                                                                  \
        BbStatus s_ = (call);                                             \
        if (s_ != BB_STATUS_OK) {                                         \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_,             \
                    bb_last_error() ? bb_last_error() : "(none)");        \
            return 1;                                                     \
        }                                                                 \
    } while (0)

int main(void) {
    BbConfig *cfg = NULL;
    BbOutput *out = NULL;
    BbScenario *scn = NULL;
    BbChannel *ch = NULL;
    size_t rows = 0, l = 0, n = 0;
    bool passed = false;
    double boost = 0.0, re = 0.0, im = 0.0;
    unsigned idx[2 * 16];

    CHECK(bb_config_new("examples", &cfg));
    CHECK(bb_config_set(cfg, "examples", "1"));
    CHECK(bb_config_set(cfg, "N", "9,19"));
    if (bb_config_set(cfg, "N", "8,16") != BB_STATUS_CONFIG) {
        fprintf(stderr, "even N accepted\n");
        return 1;
    }
    CHECK(bb_run(cfg, &out));
    CHECK(bb_output_num_rows(out, &rows));
    CHECK(bb_output_passed(out, &passed));
    if (rows == 0 || !passed || strncmp(bb_output_csv(out), "experiment,", 11) != 0) {
        fprintf(stderr, "unexpected output\n");
        return 1;
    }
    bb_output_free(out);
    bb_config_free(cfg);

    CHECK(bb_scenario_builtin("double_irs", &scn));
    CHECK(bb_scenario_realize(scn, 16, 3, 0, &ch));
    CHECK(bb_channel_shape(ch, &l, &n));
    if (l != 2 || n != 16) {
        fprintf(stderr, "shape %zu x %zu\n", l, n);
        return 1;
    }
    CHECK(bb_channel_beamform(ch, "cpp", 0, 1, idx, l * n, &boost, NULL));
    CHECK(bb_channel_effective(ch, idx, l * n, &re, &im));
    if (!(boost > 1.0) || !(re * re + im * im > 0.0)) {
        fprintf(stderr, "boost %g, |g|^2 %g\n", boost, re * re + im * im);
        return 1;
    }
    if (bb_channel_beamform(ch, "nope", 0, 1, NULL, 0, NULL, NULL) != BB_STATUS_INVALID_ARGUMENT) {
        fprintf(stderr, "unknown method accepted\n");
        return 1;
    }
    bb_channel_free(ch);
    bb_scenario_free(scn);
    printf("ok %s\n", bb_version());
    return 0;
}
