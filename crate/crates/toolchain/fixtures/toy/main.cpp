#include "kahan.h"

#include <chrono>
#include <cstdio>
#include <cstring>

static int usage() {
    std::fprintf(stderr, "usage: prog --test <name> --input <path>\n");
    return 2;
}

int main(int argc, char** argv) {
    const char* test = nullptr;
    const char* input = nullptr;
    for (int i = 1; i + 1 < argc; i += 2) {
        if (std::strcmp(argv[i], "--test") == 0) test = argv[i + 1];
        else if (std::strcmp(argv[i], "--input") == 0) input = argv[i + 1];
        else return usage();
    }
    if (!test || !input) return usage();
    std::vector<double> in = read_input(input);

    if (std::strcmp(test, "kahan") == 0) {
        std::vector<double> terms(100000);
        for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = 1.0 / static_cast<double>(i + 1);
        write_scalar(kahan_sum(terms.data(), terms.size()));
    } else if (std::strcmp(test, "scale") == 0) {
        scale_vector(in, 2.0);
        write_vector(in);
    } else if (std::strcmp(test, "roundtrip") == 0) {
        for (double& x : in) x = roundtrip(x);
        write_vector(in);
    } else if (std::strcmp(test, "clock") == 0) {
        auto now = std::chrono::steady_clock::now().time_since_epoch();
        write_scalar(static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(now).count()));
    } else {
        std::fprintf(stderr, "unknown test %s\n", test);
        return 2;
    }
    return 0;
}
