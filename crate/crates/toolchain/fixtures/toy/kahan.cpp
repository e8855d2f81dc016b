#include "kahan.h"

int kahan_block_size() { return 1024; }

// Compensated summation. Reassociation cancels the compensation term.
double kahan_sum(const double* xs, std::size_t n) {
    double sum = 0.0;
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double y = xs[i] - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    return sum;
}
