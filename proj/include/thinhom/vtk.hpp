// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include <Eigen/Dense>

#include "thinhom/error.hpp"
#include "thinhom/fem_assembly.hpp"

namespace thinhom {

/// Legacy ASCII rectilinear grid with vertex values of a velocity and a pressure field.
template <int Dim>
void write_vtk(const std::string& path, const FunctionSpace<Dim>& V, const Eigen::VectorXd& u, const FunctionSpace<Dim>& Q,
               const Eigen::VectorXd& p)
{
    static_assert(Dim == 2 || Dim == 3);
    const auto& mesh = V.mesh();
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(Errc::io_error, "cannot open " + path);
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    int n[3] = {1, 1, 1};
    for (int k = 0; k < Dim; ++k)
        n[k] = mesh.cells(k) + 1;
    out << "# vtk DataFile Version 3.0\nthinhom fields\nASCII\nDATASET RECTILINEAR_GRID\n";
    out << "DIMENSIONS " << n[0] << ' ' << n[1] << ' ' << n[2] << '\n';
    const char* names[3] = {"X_COORDINATES", "Y_COORDINATES", "Z_COORDINATES"};
    for (int k = 0; k < 3; ++k) {
        out << names[k] << ' ' << n[k] << " double\n";
        for (int i = 0; i < n[k]; ++i)
            out << (k < Dim ? num(mesh.axis(k)[i]) : "0") << (i + 1 < n[k] ? ' ' : '\n');
    }
    const long total = static_cast<long>(n[0]) * n[1] * n[2];
    out << "POINT_DATA " << total << "\nVECTORS velocity double\n";
    std::string pressure;
    for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j)
            for (int i = 0; i < n[0]; ++i) {
                Point<Dim> x;
                const int idx[3] = {i, j, k};
                for (int a = 0; a < Dim; ++a)
                    x[a] = mesh.axis(a)[idx[a]];
                const Eigen::VectorXd v = V.evaluate(u, x);
                out << num(v[0]) << ' ' << num(v[1]) << ' ' << (Dim == 3 ? num(v[2]) : "0") << '\n';
                pressure += num(Q.evaluate(p, x)[0]);
                pressure += '\n';
            }
    out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n" << pressure;
    if (!out)
        throw Error(Errc::io_error, "write failed for " + path);
}

} // namespace thinhom
