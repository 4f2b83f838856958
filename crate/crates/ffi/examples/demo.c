#include <stdio.h>
#include "ialign.h"

int main(void) {
    IalignNetwork *net = NULL;
    IalignChannels *ch = NULL;
    IalignSolution *sol = NULL;
    IalignRunInfo info;
    double rate = 0.0;

    if (ialign_network_new(3, 2, 2, 1, 1000.0, &net) != IALIGN_STATUS_OK ||
        ialign_channels_generate(net, 1, &ch) != IALIGN_STATUS_OK ||
        ialign_run_min_leakage(ch, net, NULL, &sol, &info) != IALIGN_STATUS_OK ||
        ialign_sum_rate(ch, sol, net, &rate) != IALIGN_STATUS_OK) {
        fprintf(stderr, "error: %s\n", ialign_last_error());
        return 1;
    }
    printf("iterations %llu, converged %d, sum rate %.4f\n",
           (unsigned long long)info.iterations, info.converged, rate);

    ialign_solution_free(sol);
    ialign_channels_free(ch);
    ialign_network_free(net);
    return 0;
}
