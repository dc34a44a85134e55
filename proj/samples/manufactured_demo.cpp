// Solves the manufactured problem on two meshes and prints the observed orders.
#include "chemofem/manufactured.hpp"

#include <cstdio>

int main() {
    using namespace chemofem;
    const auto report = convergence_study({8, 16}, 1e-3, 0.01, InitMode::EllipticProjection);
    for (const VariableTable* t : {&report.eta, &report.c, &report.u1, &report.u2}) {
        std::printf("%-4s  L2 error %.3e -> %.3e  (order %.2f)   H1 order %.2f\n", t->name.c_str(),
                    t->rows[0].norms.linf_l2, t->rows[1].norms.linf_l2, t->order_linf_l2(1), t->order_l2_h1(1));
    }
}
