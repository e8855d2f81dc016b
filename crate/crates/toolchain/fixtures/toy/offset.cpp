#include "kahan.h"

// Adding and removing 2^52 rounds to an integer. Once both calls are
// inlined, reassociation folds the pair away.
double shift(double x) { return x + 0x1p52; }
double unshift(double x) { return x - 0x1p52; }

double roundtrip(double x) { return unshift(shift(x)); }
