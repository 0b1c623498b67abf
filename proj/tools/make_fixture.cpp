#include <iostream>

#include <CLI11.hpp>

#include "eiv/errors.hpp"
#include "eiv/fixture.hpp"

// Writes a y,x1,...,xr csv whose sufficient statistics equal the requested
// values; pairs with `eivreg estimate` for end-to-end checks against
// published summary tables.

int main(int argc, char** argv) {
  CLI::App app{"dataset generator with prescribed sufficient statistics"};
  eiv::FixtureTargets t;
  std::string out;
  app.add_option("--t-uz", t.t_uz, "u'z")->required();
  app.add_option("--u-sq", t.u_sq, "||u||^2")->required();
  app.add_option("--z-sq", t.z_sq, "||z||^2")->required();
  app.add_option("--s", t.s, "within-group spread s")->required();
  app.add_option("--p", t.p, "between-group degrees of freedom (n-1)")
      ->required();
  app.add_option("--r", t.r, "replicates per group")->default_val(2);
  app.add_option("--u0", t.u0, "grand-mean statistic of x");
  app.add_option("--z0", t.z0, "grand-mean statistic of y");
  app.add_option("--out", out, "output csv path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    eiv::write_sample_csv(out, eiv::make_fixture(t));
  } catch (const eiv::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
