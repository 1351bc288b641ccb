/* Minimal C caller: draw a scenario with one PU, solve it, print the rates.
 *
 *   cargo build --release -p crmimo-ffi
 *   cc -I crates/ffi/include crates/ffi/examples/solve.c \
 *      target/release/libcrmimo_ffi.a -lpthread -ldl -lm -o solve
 */
#include <stdio.h>
#include <stdlib.h>

#include "crmimo.h"

static int fail(const char *what, CrmimoStatus st) {
    fprintf(stderr, "%s failed (%d): %s\n", what, (int)st, crmimo_last_error());
    return 1;
}

int main(void) {
    const double l_ratio[] = {1.0};
    const double p_t[] = {1.0};
    CrmimoScenario *scenario = NULL;
    CrmimoStatus st = crmimo_scenario_generate(5, 5, 3, 20.0, l_ratio, p_t, 1, NULL, 0, &scenario);
    if (st != CRMIMO_STATUS_OK) return fail("generate", st);

    CrmimoOptions opts = crmimo_options_default();
    CrmimoReport *report = NULL;
    st = crmimo_solve(scenario, &opts, CRMIMO_MODE_COGNITIVE, 0.0, &report);
    if (st != CRMIMO_STATUS_OK && st != CRMIMO_STATUS_NOT_CONVERGED) {
        crmimo_scenario_free(scenario);
        return fail("solve", st);
    }

    CrmimoSummary sum;
    crmimo_report_summary(report, &sum);
    size_t n = 0;
    crmimo_report_rates(report, NULL, 0, &n);
    double *rates = malloc(n * sizeof *rates);
    crmimo_report_rates(report, rates, n, NULL);

    printf("crmimo %s: %zu iterations, converged=%d, weighted sum rate %.6f nats\n",
           crmimo_version(), sum.iterations, (int)sum.converged, sum.weighted_sum_rate);
    for (size_t i = 0; i < n; i++) printf("  user %zu: %.6f nats\n", i, rates[i]);

    free(rates);
    crmimo_report_free(report);
    crmimo_scenario_free(scenario);
    return 0;
}
