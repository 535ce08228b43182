#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "lagflow/error.hpp"
#include "lagflow/fields.hpp"
#include "lagflow/random.hpp"

using namespace lagflow;

namespace {

double max_deviation(const VelocityField& a, const VelocityField& b, double t, int n) {
  RandomStream rng(5);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec v(a.dim());
    for (int k = 0; k < a.dim(); ++k) v[k] = rng.uniform();
    worst = std::max(worst, (a.eval(t, wrap(v)) - b.eval(t, wrap(v))).norm());
  }
  return worst;
}

// Central-difference divergence.
double divergence(const VelocityField& f, const TorusPoint& x, double h) {
  double div = 0.0;
  for (int k = 0; k < f.dim(); ++k) {
    Vec e(f.dim());
    e[k] = h;
    div += (f.eval(0.0, translate(x, e))[k] - f.eval(0.0, translate(x, -1.0 * e))[k]) / (2 * h);
  }
  return div;
}

}  // namespace

TEST_SUITE("fields") {
  TEST_CASE("kernels have unit mass and compact support") {
    for (int d = 1; d <= 3; ++d)
      for (MollifierProfile p : {MollifierProfile::bump, MollifierProfile::truncated_gaussian}) {
        const MollifierKernel k = MollifierKernel::make(p, d);
        CHECK(k.verified_mass() == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(k.radial(0.0) > 0.0);
        CHECK(k.radial(1.0) == 0.0);
        CHECK(k.radial(1.5) == 0.0);
        CHECK(k.radial(0.2) > k.radial(0.6));
      }
    CHECK(parse_mollifier_profile("bump") == MollifierProfile::bump);
    CHECK(to_string(MollifierProfile::truncated_gaussian) == "truncated_gaussian");
    CHECK_THROWS_AS(parse_mollifier_profile("box"), InvalidInput);
  }

  TEST_CASE("constant field and its mollification agree") {
    const VelocityField c = constant_field(Vec{0.3, -0.2});
    const VelocityField m = mollify(c, 0.1, MollifierKernel::bump(2), 8);
    CHECK(m.kind() == FieldKind::mollified);
    CHECK(m.delta() == 0.1);
    CHECK(max_deviation(c, m, 0.0, 200) < 1e-14);
  }

  TEST_CASE("mollification error shrinks quadratically on a smooth field") {
    const VelocityField s = shear_sine(2, 1.0);
    const MollifierKernel k = MollifierKernel::bump(2);
    const double e1 = max_deviation(s, mollify(s, 0.08, k, 16), 0.0, 300);
    const double e2 = max_deviation(s, mollify(s, 0.04, k, 16), 0.0, 300);
    CHECK(e1 > 0.0);
    CHECK(e2 < e1 / 3.0);
  }

  TEST_CASE("mollify rejects bad arguments") {
    const VelocityField s = shear_sine(2, 1.0);
    CHECK_THROWS_AS(mollify(s, 0.0, MollifierKernel::bump(2)), InvalidInput);
    CHECK_THROWS_AS(mollify(s, 0.3, MollifierKernel::bump(2)), InvalidInput);
    CHECK_THROWS_AS(mollify(s, 0.1, MollifierKernel::bump(2), 4), InvalidInput);
    CHECK_THROWS_AS(mollify(s, 0.1, MollifierKernel::bump(1)), InvalidInput);
  }

  TEST_CASE("catalog fields are divergence free where declared") {
    CatalogParams rot;
    CatalogParams vortex;
    vortex.alpha = 1.5;
    for (const VelocityField& f :
         {shear_sine(2, 0.7), rigid_rotation_patch(rot), radial_vortex(vortex),
          sampled_random_divfree(3, 32)}) {
      CHECK(f.metadata().divergence_free);
      RandomStream rng(8);
      for (int i = 0; i < 50; ++i) {
        const TorusPoint x = wrap({rng.uniform(), rng.uniform()});
        if (f.name() == "radial_vortex" && periodic_distance(x, wrap({0.5, 0.5})) < 0.05) continue;
        const double tol = f.kind() == FieldKind::grid_sampled ? 0.5 : 1e-4;
        CHECK(std::abs(divergence(f, x, 1e-5)) < tol * (1.0 + f.metadata().sup_norm));
      }
    }
  }

  TEST_CASE("evaluations respect the declared sup bound") {
    CatalogParams vortex;
    vortex.alpha = 1.2;
    for (const VelocityField& f : {rigid_rotation_patch(CatalogParams{}), radial_vortex(vortex),
                                   sampled_random_divfree(11, 16)}) {
      RandomStream rng(9);
      for (int i = 0; i < 2000; ++i)
        CHECK(f.eval(0.5, wrap({rng.uniform(), rng.uniform()})).norm() <=
              f.metadata().sup_norm * (1.0 + 1e-12));
    }
  }

  TEST_CASE("closed-form flows solve the ODE") {
    CatalogParams vortex;
    vortex.alpha = 1.5;
    for (const VelocityField& f :
         {constant_field(Vec{0.2, 0.1}), shear_sine(2, 0.5), rigid_rotation_patch(CatalogParams{}),
          radial_vortex(vortex)}) {
      REQUIRE(f.has_exact_flow());
      RandomStream rng(10);
      for (int i = 0; i < 50; ++i) {
        const TorusPoint x0 = wrap({rng.uniform(), rng.uniform()});
        if (periodic_distance(x0, wrap({0.5, 0.5})) < 0.05) continue;
        const double t = 0.3, h = 1e-6;
        const TorusVector dx =
            periodic_displacement(f.exact_flow(t - h, x0), f.exact_flow(t + h, x0));
        const Vec u = f.eval(t, f.exact_flow(t, x0));
        CHECK((1.0 / (2 * h) * dx.as_vec() - u).norm() < 1e-5 * (1.0 + u.norm()));
      }
    }
    CHECK_THROWS_AS(sampled_random_divfree(1, 8).exact_flow(0.1, wrap({0.1, 0.1})), InvalidInput);
  }

  TEST_CASE("rigid rotation patch rotates rigidly inside the inner radius") {
    const VelocityField f = rigid_rotation_patch(CatalogParams{});
    const Vec u = f.eval(0.0, wrap({0.6, 0.5}));
    CHECK(u[0] == doctest::Approx(0.0));
    CHECK(u[1] == doctest::Approx(2.0 * std::numbers::pi * 0.1));
    CHECK(f.eval(0.0, wrap({0.05, 0.05})).norm() == 0.0);
    CHECK(f.exact_flow(1.0, wrap({0.6, 0.5}))[0] == doctest::Approx(0.6));
  }

  TEST_CASE("radial vortex declared exponent is validated") {
    CatalogParams p;
    p.alpha = 1.2;
    CHECK(radial_vortex_critical_exponent(1.2) == doctest::Approx(2.5));
    CHECK(radial_vortex(p).metadata().p == doctest::Approx(1.75));
    CHECK_FALSE(radial_vortex(p).metadata().lipschitz);
    p.p = 2.4;
    CHECK(radial_vortex(p).metadata().p == 2.4);
    p.p = 3.0;
    CHECK_THROWS_AS(radial_vortex(p), InvalidInput);
    p.p = 0.0;
    p.alpha = 2.0;
    CHECK_THROWS_AS(radial_vortex(p), InvalidInput);
  }

  TEST_CASE("catalog dispatch") {
    CatalogParams p;
    p.velocity = {0.25, 0.5};
    CHECK(catalog_field("constant", p).eval(0.0, wrap({0.1, 0.2}))[1] == 0.5);
    CHECK(catalog_field("shear_sine", p).name() == "shear_sine");
    CHECK_THROWS_AS(catalog_field("whirlpool", p), InvalidInput);
    CHECK_THROWS_AS(shear_sine(1), InvalidInput);
    p.dim = 1;
    CHECK_THROWS_AS(rigid_rotation_patch(p), InvalidInput);
  }

  TEST_CASE("sampled random field is seeded") {
    const VelocityField a = sampled_random_divfree(4, 16);
    const VelocityField b = sampled_random_divfree(4, 16);
    const VelocityField c = sampled_random_divfree(5, 16);
    CHECK(max_deviation(a, b, 0.2, 100) == 0.0);
    CHECK(max_deviation(a, c, 0.2, 100) > 0.0);
    CHECK(a.kind() == FieldKind::grid_sampled);
    CHECK_THROWS_AS(a.eval(1.5, wrap({0.1, 0.1})), InvalidInput);
  }

  TEST_CASE("grid samples interpolate multilinearly") {
    GridSamples s;
    s.dim = 2;
    s.n_x = {4, 4};
    s.n_t = 2;
    s.horizon = 1.0;
    s.values.resize(s.expected_size());
    for (int slab = 0; slab < 2; ++slab)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          const std::size_t base = ((slab * 4 + i) * 4 + j) * 2;
          s.values[base] = i + 10 * slab;
          s.values[base + 1] = j;
        }
    FieldMetadata meta;
    meta.sup_norm = 100.0;
    const VelocityField f = VelocityField::from_samples("grid", s, meta);
    CHECK(f.eval(0.1, wrap({0.25, 0.5}))[0] == doctest::Approx(1.0));
    CHECK(f.eval(0.1, wrap({0.25, 0.5}))[1] == doctest::Approx(2.0));
    CHECK(f.eval(0.1, wrap({0.375, 0.125}))[0] == doctest::Approx(1.5));
    CHECK(f.eval(0.1, wrap({0.375, 0.125}))[1] == doctest::Approx(0.5));
    CHECK(f.eval(0.75, wrap({0.25, 0.0}))[0] == doctest::Approx(11.0));
    s.values.pop_back();
    CHECK_THROWS_AS(VelocityField::from_samples("bad", s, meta), InvalidInput);
  }

  TEST_CASE("field files round trip") {
    GridSamples s;
    s.dim = 1;
    s.n_x = {8};
    s.n_t = 3;
    s.horizon = 2.0;
    for (std::size_t k = 0; k < s.expected_size(); ++k) s.values.push_back(0.125 * k - 1.0);
    const auto path = (std::filesystem::temp_directory_path() / "lagflow_field_rt.bin").string();
    write_field_file(path, s);
    const GridSamples r = read_field_file(path);
    CHECK(r.dim == 1);
    CHECK(r.n_x == s.n_x);
    CHECK(r.n_t == 3);
    CHECK(r.horizon == 2.0);
    CHECK(r.values == s.values);
    const VelocityField f = load_field_file(path, FieldMetadata{});
    CHECK(f.metadata().sup_norm == doctest::Approx(1.875));

    {
      std::ofstream os(path, std::ios::binary);
      os << "NOPE!garbage";
    }
    CHECK_THROWS_AS(read_field_file(path), IoError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_field_file(path), IoError);
  }

  TEST_CASE("time averaged velocity uses the midpoint rule") {
    FieldMetadata meta;
    meta.sup_norm = 10.0;
    const VelocityField f = VelocityField::analytic(
        "linear_in_time", 1, [](double t, const TorusPoint&) { return Vec{t * t}; }, meta);
    CHECK(time_averaged_velocity(f, 0.0, 1.0, wrap({0.0}), 1)[0] == doctest::Approx(0.25));
    CHECK(time_averaged_velocity(f, 0.0, 1.0, wrap({0.0}), 64)[0] ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-4));
    CHECK_THROWS_AS(time_averaged_velocity(f, 1.0, 0.5, wrap({0.0})), InvalidInput);
  }

  TEST_CASE("mollifying an affine sawtooth away from its jump is the identity") {
    FieldMetadata meta;
    meta.sup_norm = 0.5;
    const VelocityField saw = VelocityField::analytic(
        "sawtooth", 2, [](double, const TorusPoint& x) { return Vec{x[0] - 0.5, 0.0}; }, meta);
    const double delta = 0.05;
    const MollifierKernel k = MollifierKernel::bump(2);
    const VelocityField m = mollify(saw, delta, k, 16);
    // Independent oracle: midpoint rule on a fine grid over the kernel support.
    const auto fine = [&](const TorusPoint& x) {
      const int n = 400;
      double num = 0.0, den = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double z0 = -1.0 + (2.0 * i + 1.0) / n, z1 = -1.0 + (2.0 * j + 1.0) / n;
          const double w = k.radial(std::hypot(z0, z1));
          if (w == 0.0) continue;
          num += w * saw.eval(0.0, translate(x, Vec{delta * z0, delta * z1}))[0];
          den += w;
        }
      return num / den;
    };
    for (double x0 : {0.06, 0.2, 0.5, 0.81, 0.94}) {
      const TorusPoint x = wrap({x0, 0.3});
      CHECK(fine(x) == doctest::Approx(x0 - 0.5).epsilon(1e-9));
      CHECK(m.eval(0.0, x)[0] == doctest::Approx(x0 - 0.5).epsilon(1e-3));
    }
  }

  TEST_CASE("mollification error of the vortex halves with delta") {
    const VelocityField u = radial_vortex(CatalogParams{});
    std::vector<double> sup;
    for (double delta : {0.2, 0.1, 0.05}) {
      const VelocityField m = mollify(u, delta, MollifierKernel::bump(2), 16);
      double worst = 0.0;
      for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) {
          const TorusPoint x = wrap({i / 64.0, j / 64.0});
          worst = std::max(worst, (m.eval(0.0, x) - u.eval(0.0, x)).norm());
        }
      sup.push_back(worst);
    }
    for (std::size_t k = 1; k < sup.size(); ++k) {
      CHECK(sup[k] / sup[k - 1] >= 0.4);
      CHECK(sup[k] / sup[k - 1] <= 0.6);
    }
  }

  TEST_CASE("four point midpoint average of t squared") {
    FieldMetadata meta;
    meta.sup_norm = 1.0;
    const VelocityField f = VelocityField::analytic(
        "t_squared", 2, [](double t, const TorusPoint&) { return Vec{t * t, 0.0}; }, meta);
    const Vec v = time_averaged_velocity(f, 0.0, 1.0, wrap({0.3, 0.3}), 4);
    CHECK(v[0] == doctest::Approx(0.328125).epsilon(1e-14));
    CHECK(v[1] == 0.0);
  }

  TEST_CASE("vortex gradient integrability matches the critical exponent") {
    CatalogParams params;
    params.alpha = 1.5;
    const VelocityField u = radial_vortex(params);
    CHECK(radial_vortex_critical_exponent(1.5) == doctest::Approx(4.0));
    // |Du| by central differences, integrated over dyadic annuli around the center.
    const auto grad_norm = [&](const TorusPoint& x, double h) {
      double s = 0.0;
      for (int k = 0; k < 2; ++k) {
        Vec e(2);
        e[k] = h;
        const Vec d = (1.0 / (2 * h)) * (u.eval(0.0, translate(x, e)) - u.eval(0.0, translate(x, -1.0 * e)));
        s += d[0] * d[0] + d[1] * d[1];
      }
      return std::sqrt(s);
    };
    const auto annulus = [&](double p, int level) {
      const double r_in = std::ldexp(0.1, -level - 1), r_out = std::ldexp(0.1, -level);
      const int nr = 16, nth = 64;
      double total = 0.0;
      for (int i = 0; i < nr; ++i) {
        const double r = r_in + (i + 0.5) * (r_out - r_in) / nr;
        for (int j = 0; j < nth; ++j) {
          const double th = 2 * std::numbers::pi * (j + 0.5) / nth;
          const TorusPoint x = wrap({0.5 + r * std::cos(th), 0.5 + r * std::sin(th)});
          total += std::pow(grad_norm(x, 1e-3 * r), p) * r;
        }
      }
      return total * (r_out - r_in) / nr * 2 * std::numbers::pi / nth;
    };
    for (int l = 2; l < 10; ++l) {
      // Contributions shrink geometrically below the critical exponent and grow above it.
      CHECK(annulus(3.0, l + 1) < 0.9 * annulus(3.0, l));
      CHECK(annulus(5.0, l + 1) > 1.1 * annulus(5.0, l));
    }
  }
}
