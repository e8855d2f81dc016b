#include "kahan.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>

std::vector<double> read_input(const std::string& path) {
    std::vector<double> out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(std::strtod(line.c_str(), nullptr));
    }
    return out;
}

void write_scalar(double x) { std::printf("SCALAR\n%a\n", x); }

void write_vector(const std::vector<double>& v) {
    std::printf("VECTOR %zu\n", v.size());
    for (double x : v) std::printf("%a\n", x);
}
