// Command line front end for the experiment drivers.

#include "regselect/dataset_io.hpp"
#include "regselect/studies.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace regselect;

namespace {

void write_text(const std::string& path, const std::string& text)
{
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << text;
    if (!os) throw std::runtime_error("write failed for " + path);
}

std::string summary_path(const std::string& out)
{
    if (out.empty()) return {};
    std::filesystem::path p(out);
    const auto ext = p.extension().string();
    p.replace_extension();
    return p.string() + "_summary" + (ext.empty() ? ".csv" : ext);
}

struct Raw {
    std::string grid;
    std::string tau_range;
    std::vector<double> tau;
    std::size_t threads = 0;
    std::string out;
};

void add_common(CLI::App& app, StudyConfig& c, Raw& raw)
{
    app.add_option("--model", c.model, "spectral | sparse-denoise | sparse-deblur | tv-images")
        ->check(CLI::IsMember({"spectral", "sparse-denoise", "sparse-deblur", "tv-images"}));
    app.add_option("--d", c.d, "signal dimension");
    app.add_option("--s", c.s, "source condition power (spectral model)");
    app.add_option("--sparsity", c.sparsity, "nonzeros per sparse signal");
    app.add_option("--tau", raw.tau, "noise level; one value, or a list for compare-qo")->delimiter(',');
    app.add_option("--n", c.n, "training set size");
    app.add_option("--n-mc", c.n_mc, "Monte Carlo draws for expected risk");
    app.add_option("--grid", raw.grid, "parameter grid lo:hi:N");
    app.add_option("--filter", c.filters, "tikhonov | landweber | cutoff | lasso | tv")->delimiter(',');
    app.add_option("--loss", c.loss, "auto | truncated | l1-bregman | l1-bregman-sign | tv-bregman");
    app.add_option("--seed", c.seed, "master seed");
    app.add_option("--trials", c.trials, "independent repetitions");
    app.add_option("--out", raw.out, "output path; stdout when omitted");

    app.add_option("--tau-range", raw.tau_range, "noise levels lo:hi:N for sweeps");
    app.add_option("--n-values", c.n_values, "training sizes for plateau-study")->delimiter(',');
    app.add_option("--n-test", c.n_test, "test set size for compare-qo");
    app.add_option("--step", c.step, "Landweber step size");
    app.add_option("--eta", c.eta, "confidence level for bounds");
    app.add_option("--images", c.images, "IDX image file for tv-images");
    app.add_option("--side", c.side, "image side for synthetic digits");
    app.add_option("--pool", c.pool, "image pool size");
    app.add_option("--train-fraction", c.train_fraction, "share of the pool used for training");
    app.add_option("--threads", raw.threads, "worker threads; 0 uses all cores");
}

void finalize(StudyConfig& c, const Raw& raw, bool tau_list)
{
    if (!raw.grid.empty()) c.grid = GridSpec::parse(raw.grid);
    if (!raw.tau_range.empty()) {
        const auto r = GridSpec::parse(raw.tau_range);
        c.tau_lo = r.lo;
        c.tau_hi = r.hi;
        c.tau_count = r.count;
    }
    if (!raw.tau.empty()) {
        if (tau_list) {
            c.taus = raw.tau;
        } else {
            if (raw.tau.size() != 1) throw std::invalid_argument("--tau takes one value here");
            c.tau = raw.tau.front();
        }
    }
    worker_count() = raw.threads;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Learned regularization parameters for linear inverse problems"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value configuration file; flags override it");

    StudyConfig c;
    Raw raw;

    struct Command {
        const char* name;
        const char* help;
        std::function<void()> run;
    };
    const std::vector<Command> commands{
        {"generate", "write a training dataset file",
         [&] {
             std::ostringstream os;
             write_dataset(os, run_generate(c));
             write_text(raw.out, os.str());
         }},
        {"risk-curve", "empirical risk over the grid for one training set",
         [&] { write_text(raw.out, run_risk_curve(c).str()); }},
        {"rate-study", "oracle parameter and risk against the noise level",
         [&] { write_text(raw.out, to_csv(rate_study(c), c.s).str()); }},
        {"noise-study", "learned against oracle risk over noise levels",
         [&] { write_text(raw.out, to_csv(noise_study(c)).str()); }},
        {"plateau-study", "learned risk against training set size",
         [&] {
             const auto r = plateau_study(c);
             write_text(raw.out, to_csv(r).str());
             const auto summary = summary_csv(r).str();
             if (raw.out.empty()) {
                 std::cout << '\n' << summary;
             } else {
                 write_text(summary_path(raw.out), summary);
             }
         }},
        {"compare-qo", "learned parameter against quasi-optimality",
         [&] { write_text(raw.out, to_csv(compare_qo(c)).str()); }},
        {"bound-check", "a priori bounds next to measured risks",
         [&] { write_text(raw.out, to_csv(bound_check(c)).str()); }},
    };

    add_common(app, c, raw);
    std::vector<CLI::App*> subs;
    for (const auto& cmd : commands) subs.push_back(app.add_subcommand(cmd.name, cmd.help));

    CLI11_PARSE(app, argc, argv);

    try {
        for (std::size_t i = 0; i < commands.size(); ++i) {
            if (!subs[i]->parsed()) continue;
            finalize(c, raw, std::string(commands[i].name) == "compare-qo");
            commands[i].run();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
