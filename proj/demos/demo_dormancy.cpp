// Dormancy walkthrough on the punctured line over F_3. Four scenes: a
// rank-one connection whose p-curvature blocks descent, a logarithmic twist
// that descends, a level-one Frobenius pullback with its full solution
// chain, and a candidate rebuilt from a Tango generator.

#include <frobstruct/dmod.hpp>
#include <frobstruct/indigenous.hpp>
#include <frobstruct/tango.hpp>

#include <cstdio>
#include <string>

using namespace frobstruct;

namespace {

void print_matrix(const char* tag, const PolyMat& m) {
  std::printf("  %s:\n", tag);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::printf("    [");
    for (std::size_t j = 0; j < m.cols(); ++j)
      std::printf(" %s%s", m.at(i, j).to_string().c_str(),
                  j + 1 < m.cols() ? "," : " ");
    std::printf("]\n");
  }
}

void print_basis(const char* tag, const SolBasis& sol) {
  std::printf("  %s:\n", tag);
  for (const auto& v : sol.vectors) {
    std::printf("    (");
    for (std::size_t j = 0; j < v.size(); ++j)
      std::printf(" %s%s", v[j].to_string().c_str(),
                  j + 1 < v.size() ? "," : " ");
    std::printf(")\n");
  }
}

}  // namespace

int main() {
  const ChartPtr c = make_chart(3, {"x"}, {true});
  const RingElem x = RingElem::variable(c, 0);

  std::printf("== d + x^2 dx: the form moves under Cartier\n");
  const OneForm steep(c, {x * x});
  const DMod awake = invertible_from_form(steep);
  std::printf("  Cartier image: %s\n", cartier(steep).to_string().c_str());
  const DormancyResult da = dormancy(awake);
  std::printf("  dormant: %s (%s)\n", da.dormant ? "yes" : "no",
              da.reason.c_str());
  print_matrix("p-curvature", p_curvature(awake, 0));

  std::printf("\n== d + 2 dx/x: a logarithmic form fixed by Cartier\n");
  const OneForm logarithmic(c, {RingElem::monomial(c, {-1}, 2)});
  const DMod asleep = invertible_from_form(logarithmic);
  std::printf("  Cartier image: %s\n",
              cartier(logarithmic).to_string().c_str());
  std::printf("  dormant: %s\n", dormancy(asleep).dormant ? "yes" : "no");
  print_basis("horizontal sections", sol_level0(asleep));

  std::printf("\n== rank-two Frobenius pullback at level one, unit x\n");
  const DMod pulled = frobenius_pullback(2, 2, x);
  const ValidationReport rep = validate(pulled);
  std::printf("  validates: %s\n", rep.ok ? "yes" : rep.message.c_str());
  print_matrix("action of D<1>", pulled.gen(0, 0));
  print_matrix("action of D<3>", pulled.gen(0, 1));
  const DormancyResult dp = dormancy(pulled);
  std::printf("  dormant: %s, chain stages: %zu\n", dp.dormant ? "yes" : "no",
              dp.chain.size());
  for (std::size_t s = 0; s < dp.chain.size(); ++s)
    std::printf("  stage %zu solution rank: %zu\n", s,
                dp.chain[s].vectors.size());
  print_basis("stage 0 sections", dp.chain[0]);

  std::printf("\n== from the Tango generator [t - t^3] to a candidate\n");
  const ChartPtr a = make_chart(3, {"t"});
  const RingElem t = RingElem::variable(a, 0);
  const TangoCandidate U(a, 2, {t - t * t * t});
  std::printf("  generator verifies: %s\n", tango_verify(U) ? "yes" : "no");
  const AffineIndigenousCandidate cand = tango_to_module(U);
  std::printf("  line section: (");
  for (std::size_t j = 0; j < cand.line.size(); ++j)
    std::printf(" %s%s", cand.line[j].to_string().c_str(),
                j + 1 < cand.line.size() ? "," : " ");
  std::printf(")\n");
  std::printf("  Kodaira-Spencer unit: %s\n",
              is_indigenous(cand) ? "yes" : "no");
  std::printf("  splitting holds: %s\n", affine_check(cand) ? "yes" : "no");
  std::printf("  module dormant: %s\n",
              dormancy(cand.module).dormant ? "yes" : "no");
  return 0;
}
