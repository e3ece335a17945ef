// Counting tour: basis tuples of a Tate module and their two quotients, the
// hyperelliptic invariant-class table, Chern obstructions for the standard
// surface classes, genus counts with their integrality residuals, and orbit
// counts on the affine line.

#include <frobstruct/affine_orbits.hpp>
#include <frobstruct/combin.hpp>

#include <cstdio>
#include <string>

using namespace frobstruct;

int main() {
  std::printf("== basis tuples of (Z/3)^2\n");
  const TateLevel lvl{2, 1, 3};
  const auto tuples = enumerate_B(lvl);
  std::printf("  enumerated: %zu, closed form: %s\n", tuples.size(),
              formula_count_B(lvl).str().c_str());
  std::printf("  symmetric classes: %zu, full-flag classes: %zu, ratio: %lld\n",
              sn_classes(tuples).size(),
              delta_classes(tuples, lvl).size(),
              static_cast<long long>(quotient_ratio(lvl)));

  std::printf("\n== rank-one tower over F_3\n  ");
  for (int N = 1; N <= 6; ++N)
    std::printf("N=%d: %s%s", N, formula_count_B({1, N, 3}).str().c_str(),
                N < 6 ? ", " : "\n");

  std::printf("\n== hyperelliptic actions, invariant classes\n");
  for (const std::string& type : hyperelliptic_types()) {
    const std::int64_t p = (type.front() == 'Z' && (type == "Z/3" ||
                            type == "Z/3xZ/3" || type == "Z/6")) ? 7 : 5;
    const GroupAction action = hyperelliptic_action(type, p, 1);
    std::printf("  %-8s on (Z/%lld)^2: symmetric %zu, full-flag %zu\n",
                type.c_str(), static_cast<long long>(p),
                invariant_classes(action, ClassKind::SN).size(),
                invariant_classes(action, ClassKind::DELTA).size());
  }

  std::printf("\n== Chern gaps and obstructions of the surface classes\n");
  for (const SurfaceEntry& e : surface_table(2)) {
    const ChernVerdict at3 = chern_obstruction(e.chern, ChernMode::PROJ, 3, 1);
    const ChernVerdict at9 = chern_obstruction(e.chern, ChernMode::PROJ, 3, 2);
    std::printf("  %-13s c1^2 - 3 c2 = %4lld   mod 3: %-4s mod 9: %s\n",
                e.name.c_str(),
                static_cast<long long>(e.chern.c1sq - 3 * e.chern.c2),
                at3.obstructed ? "obst" : "ok", at9.obstructed ? "obst" : "ok");
  }
  const ChernData prod = product_chern(2, 3);
  std::printf("  genus (2, 3) product: c1^2 = %lld, c2 = %lld, obstructed at "
              "p=5: %s, p=7: %s\n",
              static_cast<long long>(prod.c1sq),
              static_cast<long long>(prod.c2),
              product_obstructed(2, 3, 5, 1) ? "yes" : "no",
              product_obstructed(2, 3, 7, 1) ? "yes" : "no");

  std::printf("\n== genus counts with integrality residuals\n");
  for (const std::int64_t p : {3, 5, 7, 11, 13}) {
    std::printf("  p=%-2lld ", static_cast<long long>(p));
    for (int g = 2; g <= 4; ++g) {
      const GenusCount gc = genus_count(p, g);
      std::printf("g=%d: %-8lld", g, static_cast<long long>(gc.count));
    }
    std::printf("residual: %.1e\n", genus_count(p, 4).residual);
  }

  std::printf("\n== etale orbit counts on the affine line over F_3\n");
  for (int N = 1; N <= 2; ++N) {
    std::printf("  level %d: ", N);
    for (const std::int64_t d : {1, 3, 6, 9, 12})
      std::printf("d=%lld: %s  ", static_cast<long long>(d),
                  count_orbits(3, N, d).str().c_str());
    std::printf("\n");
  }
  return 0;
}
