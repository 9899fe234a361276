#pragma once

#include <cstddef>
#include <vector>

namespace atmp {

using Vec = std::vector<double>;

// Dense row-major matrix. Just enough for the toy models and landscape grids.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

double dot(const Vec& a, const Vec& b);
void axpy(double a, const Vec& x, Vec& y);  // y += a * x
Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec scaled(const Vec& v, double a);
double l2_norm(const Vec& v);
double l2_dist(const Vec& a, const Vec& b);
Vec matvec(const Mat& m, const Vec& v);
bool all_finite(const Vec& v);

}  // namespace atmp
