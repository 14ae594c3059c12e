#include "cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

using namespace billspec;
using namespace billspec::cli;

int main(int argc, char** argv) {
    CLI::App app{"Periodic orbits, action gaps and normal forms of convex billiards"};
    app.require_subcommand(1);

    const std::map<std::string, Table> tables{{"inner", Table::Inner}, {"outer", Table::Outer}};
    const std::map<std::string, Format> formats{{"csv", Format::Csv}, {"jsonl", Format::Jsonl}};

    SpectrumArgs sp;
    auto* spectrum = app.add_subcommand("spectrum", "Action gaps over coprime q");
    spectrum->add_option("curve", sp.curve, "Curve file (.json or .toml)")->required()->check(CLI::ExistingFile);
    spectrum->add_option("--table", sp.table, "inner or outer")->transform(CLI::CheckedTransformer(tables));
    spectrum->add_option("--p", sp.p, "Winding number");
    spectrum->add_option("--q-min", sp.q_min, "Smallest period");
    spectrum->add_option("--q-max", sp.q_max, "Largest period");
    spectrum->add_option("--bits", sp.bits, "Mantissa bits");
    spectrum->add_option("--out", sp.out, "Output file; rows already present are skipped");
    spectrum->add_option("--format", sp.format, "csv or jsonl")->transform(CLI::CheckedTransformer(formats));
    spectrum->add_option("--cache-dir", sp.cache_dir, "Run cache directory");
    spectrum->add_flag("--serial", sp.serial, "Disable the parallel kernels");

    FitArgs fit;
    std::vector<int> resonance;
    auto* fitc = app.add_subcommand("fit", "Exponential fit of a spectrum file");
    fitc->add_option("input", fit.in, "CSV or JSONL spectrum")->required()->check(CLI::ExistingFile);
    fitc->add_option("--p", fit.p, "Winding number of the rows to fit");
    fitc->add_option("--q-min", fit.q_min, "Drop rows below this period");
    fitc->add_option("--q-max", fit.q_max, "Drop rows above this period");
    fitc->add_option("--resonant", resonance, "m n of the resonance; abscissa q/|np - mq|")->expected(2);

    AsymptoticsArgs as;
    auto* asym = app.add_subcommand("asymptotics", "q^-2 coefficients of lengths and areas");
    asym->add_option("curve", as.curve, "Curve file")->required()->check(CLI::ExistingFile);
    asym->add_option("--p", as.p, "Winding number for the length coefficient");
    asym->add_option("--q", as.q, "Doubling periods for Richardson extrapolation")->delimiter(',');
    asym->add_option("--bits", as.bits, "Mantissa bits");

    NormalFormArgs nf;
    auto* normal = app.add_subcommand("normalform", "Averaging ladder on the billiard map series");
    normal->add_option("curve", nf.curve, "Curve file")->required()->check(CLI::ExistingFile);
    normal->add_option("--bits", nf.bits, "Mantissa bits");
    normal->add_option("--K", nf.K, "Harmonic cut-off");
    normal->add_option("--J", nf.J, "Power cut-off");
    normal->add_option("--order", nf.order, "Target order of the ladder");
    normal->add_option("--radius", nf.radius, "Sampling radius in y");
    normal->add_option("--series-out", nf.series_out, "Write the order-2 series as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*spectrum) return cmd_spectrum(sp, std::cout, std::cerr);
        if (*fitc) {
            if (!resonance.empty()) fit.resonant = std::pair{resonance[0], resonance[1]};
            return cmd_fit(fit, std::cout, std::cerr);
        }
        if (*asym) return cmd_asymptotics(as, std::cout, std::cerr);
        if (*normal) return cmd_normalform(nf, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
