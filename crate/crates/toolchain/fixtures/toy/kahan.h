#pragma once
#include <cstddef>
#include <string>
#include <vector>

double kahan_sum(const double* xs, std::size_t n);
int kahan_block_size();

std::vector<double> read_input(const std::string& path);
void write_scalar(double x);
void write_vector(const std::vector<double>& v);

void scale_vector(std::vector<double>& v, double factor);

double roundtrip(double x);
