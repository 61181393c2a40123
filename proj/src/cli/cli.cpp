#include "ticketlab/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "ticketlab/errors.hpp"
#include "ticketlab/format.hpp"
#include "ticketlab/harness/architectures.hpp"
#include "ticketlab/harness/dataset.hpp"
#include "ticketlab/harness/experiment.hpp"
#include "ticketlab/harness/report_io.hpp"
#include "ticketlab/pruning/mask_io.hpp"

namespace ticketlab::cli {
namespace fs = std::filesystem;

namespace {

std::string default_dataset(const std::string& arch) {
    if (arch == "cnn-bn") return "mini-images";
    if (arch == "tiny-attn") return "tokens";
    return "blobs2d";
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& text, Parse parse) {
    std::vector<T> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        out.push_back(parse(item));
    }
    return out;
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
    std::string out;
    for (auto s : seeds) out += (out.empty() ? "" : ",") + std::to_string(s);
    return out;
}

std::string join_reals(const std::vector<double>& values) {
    std::string out;
    for (auto v : values) out += (out.empty() ? "" : ",") + format_double(v);
    return out;
}

std::string opt_text(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }
std::string opt_text(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

/// Timing and provenance go to a sidecar log so result files stay byte-stable.
class RunLog {
public:
    RunLog(const fs::path& dir, const std::string& command) : start_(std::chrono::steady_clock::now()) {
        log_.open(dir / "run.log", std::ios::app);
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        log_ << "[" << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ") << "] " << command << " started\n";
    }
    ~RunLog() {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
        log_ << "elapsed_seconds=" << elapsed.count() << "\n";
    }
    std::ostream& stream() { return log_; }

private:
    std::ofstream log_;
    std::chrono::steady_clock::time_point start_;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void dump_masks(const fs::path& dir, const std::vector<pruning::PruneMask>& masks) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < masks.size(); ++i) {
        std::ostringstream name;
        name << "epoch_" << std::setw(3) << std::setfill('0') << (i + 1) << ".txt";
        pruning::save_mask(dir / name.str(), masks[i]);
    }
}

// --- commands ---------------------------------------------------------------

int cmd_search(const RunSpec& spec, std::ostream& out) {
    const fs::path dir(spec.out);
    fs::create_directories(dir);
    RunLog log(dir, "search");
    const auto dataset = harness::make_dataset(spec.dataset, spec.config.seed);
    search::TicketResult search;
    const auto report = harness::run_experiment(spec.config, spec.arch, dataset, spec.retrain_budget, &search);

    harness::persist(report, dir / "report.txt");
    harness::save_metrics_csv(dir / "metrics.csv", report.metrics);
    pruning::save_mask(dir / "mask.txt", search.candidate_mask);
    if (spec.dump_masks) dump_masks(dir / "masks", search.mask_history);

    out << "stop_epoch=" << report.search_epochs << " converged=" << (report.converged ? "true" : "false")
        << " trigger_epoch=" << opt_text(report.trigger_epoch)
        << " pre_pruned_acc=" << format_double(report.pre_pruned_acc)
        << " post_prune_acc=" << format_double(report.post_prune_acc)
        << " restore_epochs=" << opt_text(report.restore_epochs) << '\n';
    return kExitOk;
}

int cmd_compare(const RunSpec& spec, unsigned jobs, std::ostream& out) {
    const fs::path dir(spec.out);
    fs::create_directories(dir);
    RunLog log(dir, "compare");
    auto eb = spec.config;
    eb.mode = search::SearchMode::kEb;
    auto worm = spec.config;
    worm.mode = search::SearchMode::kWorm;
    const auto report =
        harness::compare_paired(eb, worm, spec.arch, spec.dataset, spec.seeds, spec.retrain_budget, jobs);
    harness::persist(report, dir / "compare_report.txt");

    std::ostringstream csv;
    csv << "seed,eb_search_epochs,worm_search_epochs,delta_search_epochs,"
           "eb_pre_pruned_acc,worm_pre_pruned_acc,delta_pre_pruned_acc,"
           "eb_retrain_acc_after_1,worm_retrain_acc_after_1,delta_retrain_acc_after_1,"
           "eb_post_prune_acc,worm_post_prune_acc,delta_post_prune_acc,"
           "eb_restore_epochs,worm_restore_epochs,delta_restore_epochs\n";
    for (const auto& row : report.rows) {
        const auto d = harness::paired_delta(row);
        csv << row.seed << ',' << row.eb.search_epochs << ',' << row.worm.search_epochs << ','
            << format_double(d.search_epochs) << ',' << format_double(row.eb.pre_pruned_acc) << ','
            << format_double(row.worm.pre_pruned_acc) << ',' << format_double(d.pre_pruned_acc) << ','
            << format_double(row.eb.retrain_acc_after_1) << ',' << format_double(row.worm.retrain_acc_after_1)
            << ',' << format_double(d.retrain_acc_after_1) << ',' << format_double(row.eb.post_prune_acc) << ','
            << format_double(row.worm.post_prune_acc) << ',' << format_double(d.post_prune_acc) << ','
            << opt_text(row.eb.restore_epochs) << ',' << opt_text(row.worm.restore_epochs) << ','
            << opt_text(d.restore_epochs) << '\n';
    }
    const auto m = harness::comparison_means(report);
    csv << "mean," << format_double(m.eb.search_epochs) << ',' << format_double(m.worm.search_epochs) << ','
        << format_double(m.delta.search_epochs) << ',' << format_double(m.eb.pre_pruned_acc) << ','
        << format_double(m.worm.pre_pruned_acc) << ',' << format_double(m.delta.pre_pruned_acc) << ','
        << format_double(m.eb.retrain_acc_after_1) << ',' << format_double(m.worm.retrain_acc_after_1) << ','
        << format_double(m.delta.retrain_acc_after_1) << ',' << format_double(m.eb.post_prune_acc) << ','
        << format_double(m.worm.post_prune_acc) << ',' << format_double(m.delta.post_prune_acc) << ','
        << opt_text(m.eb.restore_epochs) << ',' << opt_text(m.worm.restore_epochs) << ','
        << opt_text(m.delta.restore_epochs) << '\n';
    write_text(dir / "compare.csv", csv.str());

    out << "seeds=" << report.rows.size() << " mean_search_epochs eb=" << format_double(m.eb.search_epochs)
        << " worm=" << format_double(m.worm.search_epochs)
        << " mean_post_prune_acc eb=" << format_double(m.eb.post_prune_acc)
        << " worm=" << format_double(m.worm.post_prune_acc) << '\n';
    return kExitOk;
}

int cmd_sweep(const RunSpec& spec, unsigned jobs, std::ostream& out) {
    const fs::path dir(spec.out);
    fs::create_directories(dir);
    RunLog log(dir, "sweep");

    auto seeds = spec.seeds;
    std::stable_sort(seeds.begin(), seeds.end());
    auto run_one = [&spec](std::uint64_t seed) {
        auto config = spec.config;
        config.seed = seed;
        const auto dataset = harness::make_dataset(spec.dataset, seed);
        return harness::truncation_sweep(spec.r_values, config, spec.arch, dataset, spec.retrain_budget);
    };
    std::vector<harness::SweepReport> reports;
    const std::size_t width = std::max(1u, jobs);
    for (std::size_t start = 0; start < seeds.size(); start += width) {
        std::vector<std::future<harness::SweepReport>> pending;
        for (std::size_t i = start; i < std::min(start + width, seeds.size()); ++i) {
            pending.push_back(std::async(width == 1 ? std::launch::deferred : std::launch::async, run_one, seeds[i]));
        }
        for (auto& f : pending) reports.push_back(f.get());
    }
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        harness::persist(reports[i], dir / ("sweep_seed" + std::to_string(seeds[i]) + ".txt"));
    }

    std::ostringstream csv;
    csv << "r,runs,search_epochs,post_prune_acc,restore_epochs,pre_pruned_acc,retrain_acc_after_1,converged_runs\n";
    for (std::size_t k = 0; k < spec.r_values.size(); ++k) {
        std::vector<harness::RunSummary> runs;
        int converged = 0;
        for (const auto& rep : reports) {
            runs.push_back(rep.rows[k].summary);
            converged += rep.rows[k].summary.converged ? 1 : 0;
        }
        const auto m = harness::mean_of(runs);
        csv << format_double(spec.r_values[k]) << ',' << runs.size() << ',' << format_double(m.search_epochs) << ','
            << format_double(m.post_prune_acc) << ',' << opt_text(m.restore_epochs) << ','
            << format_double(m.pre_pruned_acc) << ',' << format_double(m.retrain_acc_after_1) << ',' << converged
            << '\n';
        out << "r=" << format_double(spec.r_values[k]) << " search_epochs=" << format_double(m.search_epochs)
            << " post_prune_acc=" << format_double(m.post_prune_acc) << '\n';
    }
    write_text(dir / "sweep.csv", csv.str());
    return kExitOk;
}

int cmd_trajectory(const RunSpec& spec, std::ostream& out) {
    const fs::path dir(spec.out);
    fs::create_directories(dir);
    RunLog log(dir, "trajectory");
    const auto dataset = harness::make_dataset(spec.dataset, spec.config.seed);
    auto model = harness::build_model(spec.arch, dataset.sample_shape(), dataset.num_classes, spec.config.seed);
    const auto result =
        search::ticket_search(spec.config, model, dataset.train, dataset.val, dataset.batch_size);

    std::ostringstream csv;
    csv << "epoch,d_avg,d_max,train_loss\n";
    int rows = 0;
    for (const auto& rec : result.per_epoch) {
        if (!rec.stats.full) continue;
        csv << rec.epoch << ',' << format_double(rec.stats.d_avg) << ',' << format_double(rec.stats.d_max) << ','
            << format_double(rec.train_loss) << '\n';
        ++rows;
    }
    write_text(dir / "trajectory.csv", csv.str());
    if (spec.dump_masks) dump_masks(dir / "masks", result.mask_history);
    out << "rows=" << rows << " stop_epoch=" << result.stop_epoch
        << " converged=" << (result.converged ? "true" : "false") << '\n';
    return kExitOk;
}

// --- argument handling --------------------------------------------------------

struct RawFlags {
    std::string mode = "eb";
    std::string seeds;
    std::string r_values;
    std::uint64_t seed = 1;
    std::string config_file;
    unsigned jobs = 1;
};

void add_shared_options(CLI::App& sub, RunSpec& spec, RawFlags& raw, bool multi_seed,
                        const std::string& r_names = "--r") {
    sub.add_option("--mode", raw.mode, "Search mode")->check(CLI::IsMember({"eb", "worm"}));
    sub.add_option("--arch", spec.arch, "Architecture")
        ->required()
        ->check(CLI::IsMember({"mlp-bn", "cnn-bn", "tiny-attn"}));
    sub.add_option("--dataset", spec.dataset, "Dataset name (default depends on --arch)");
    sub.add_option("--seed", raw.seed, "Random seed");
    if (multi_seed) sub.add_option("--seeds", raw.seeds, "Comma-separated seeds");
    sub.add_option("--p", spec.config.p, "Prune ratio")->check(CLI::Range(0.0, 1.0));
    sub.add_option("--s", spec.config.s, "Stopping point on max mask distance")
        ->check(CLI::Range(0.0, 1.0));
    sub.add_option("--delta", spec.config.delta, "Trigger margin")->check(CLI::NonNegativeNumber);
    sub.add_option("--l", spec.config.window, "Sliding window length")->check(CLI::PositiveNumber);
    sub.add_option(r_names, spec.config.r_trunc, "Truncation parameter")->check(CLI::Range(0.0, 1.0));
    sub.add_option("--max-epochs", spec.config.max_epochs, "Search epoch limit")->check(CLI::PositiveNumber);
    sub.add_option("--lr", spec.config.lr, "Learning rate")->check(CLI::NonNegativeNumber);
    sub.add_option("--retrain-budget", spec.retrain_budget, "Retrain epochs after pruning")
        ->check(CLI::NonNegativeNumber);
    sub.add_option("--out", spec.out, "Output directory");
    sub.add_option("--config", raw.config_file, "Flat key=value file with flag defaults");
    sub.add_flag("--dump-masks", spec.dump_masks, "Write every sampled mask");
}

/// Reads `key=value` lines and turns them into leading flag tokens, so that
/// explicit flags (parsed later) take precedence.
std::vector<std::string> config_tokens(const std::string& path, const CLI::App& sub) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot read config file '" + path + "'");
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--config", "expected key=value, got '" + line + "'");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "config") continue;
        const auto* opt = sub.get_option_no_throw("--" + key);
        if (!opt) throw CLI::ValidationError("--config", "unknown key '" + key + "'");
        if (!value.empty()) tokens.push_back("--" + key + "=" + value);
    }
    return tokens;
}

}  // namespace

void write_runspec(std::ostream& out, const RunSpec& spec) {
    const auto& c = spec.config;
    out << "mode=" << (c.mode == search::SearchMode::kWorm ? "worm" : "eb") << '\n'
        << "arch=" << spec.arch << '\n'
        << "dataset=" << spec.dataset << '\n';
    if (spec.seeds.empty()) out << "seed=" << c.seed << '\n';
    else out << "seeds=" << join_seeds(spec.seeds) << '\n';
    out << "p=" << format_double(c.p) << '\n'
        << "s=" << format_double(c.s) << '\n'
        << "delta=" << format_double(c.delta) << '\n'
        << "l=" << c.window << '\n'
        << "r=" << format_double(c.r_trunc) << '\n'
        << "max-epochs=" << c.max_epochs << '\n'
        << "lr=" << format_double(c.lr) << '\n'
        << "retrain-budget=" << spec.retrain_budget << '\n'
        << "out=" << spec.out << '\n'
        << "dump-masks=" << (spec.dump_masks ? "true" : "false") << '\n';
    if (!spec.r_values.empty()) out << "r-values=" << join_reals(spec.r_values) << '\n';
}

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Early-bird ticket search with gradient truncation", "ticketlab"};
    app.require_subcommand(1);
    RunSpec spec;
    RawFlags raw;

    auto* search_cmd = app.add_subcommand("search", "Run one search, prune, retrain");
    add_shared_options(*search_cmd, spec, raw, false);

    auto* compare_cmd = app.add_subcommand("compare", "Paired EB vs WORM runs over seeds");
    add_shared_options(*compare_cmd, spec, raw, true, "--r,--worm-r");
    compare_cmd->add_option("--jobs", raw.jobs, "Parallel seeds")->check(CLI::PositiveNumber);

    auto* sweep_cmd = app.add_subcommand("sweep", "Truncation-parameter sweep from the first epoch");
    add_shared_options(*sweep_cmd, spec, raw, true);
    sweep_cmd->add_option("--r-values", raw.r_values, "Comma-separated truncation parameters")->required();
    sweep_cmd->add_option("--jobs", raw.jobs, "Parallel seeds")->check(CLI::PositiveNumber);

    auto* trajectory_cmd = app.add_subcommand("trajectory", "Emit full-window mask-distance trajectory");
    add_shared_options(*trajectory_cmd, spec, raw, false);

    for (auto* sub : {search_cmd, compare_cmd, sweep_cmd, trajectory_cmd}) {
        for (auto* opt : sub->get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }

    std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
    try {
        // splice config-file tokens right after the command name
        if (!args.empty()) {
            auto* sub = app.get_subcommand_no_throw(args.front());
            for (std::size_t i = 1; sub && i < args.size(); ++i) {
                std::string path;
                if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
                else if (args[i].starts_with("--config=")) path = args[i].substr(9);
                if (path.empty()) continue;
                auto tokens = config_tokens(path, *sub);
                args.insert(args.begin() + 1, tokens.begin(), tokens.end());
                break;
            }
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);

        auto* used = app.get_subcommands().front();
        if (spec.dataset.empty()) spec.dataset = default_dataset(spec.arch);
        spec.config.mode = search::parse_search_mode(raw.mode);
        spec.config.seed = raw.seed;
        if (used == compare_cmd || used == sweep_cmd) {
            spec.seeds = raw.seeds.empty()
                             ? std::vector<std::uint64_t>{raw.seed}
                             : parse_list<std::uint64_t>(raw.seeds, [](const std::string& s) {
                                   return static_cast<std::uint64_t>(parse_size(s, 0));
                               });
            if (spec.seeds.empty()) throw CLI::ValidationError("--seeds", "at least one seed is required");
            spec.config.seed = *std::min_element(spec.seeds.begin(), spec.seeds.end());
        }
        if (used == sweep_cmd) {
            spec.r_values = parse_list<double>(raw.r_values, [](const std::string& s) { return parse_double(s, 0); });
            if (spec.r_values.empty()) throw CLI::ValidationError("--r-values", "at least one r value is required");
            for (double r : spec.r_values) {
                if (!(r > 0.0 && r <= 1.0)) {
                    throw CLI::ValidationError("--r-values", "values must lie in (0, 1], got " + format_double(r));
                }
            }
        }
        spec.config.validate();
        // fail fast on unusable dataset/arch combinations
        const auto probe = harness::make_dataset(spec.dataset, spec.config.seed);
        harness::build_model(spec.arch, probe.sample_shape(), probe.num_classes, spec.config.seed);

        fs::create_directories(spec.out);
        {
            std::ostringstream text;
            write_runspec(text, spec);
            write_text(fs::path(spec.out) / "runspec.cfg", text.str());
        }
        if (used == search_cmd) return cmd_search(spec, out);
        if (used == compare_cmd) return cmd_compare(spec, raw.jobs, out);
        if (used == sweep_cmd) return cmd_sweep(spec, raw.jobs, out);
        return cmd_trajectory(spec, out);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        auto* sub = args.empty() ? nullptr : app.get_subcommand_no_throw(args.back());
        err << (sub ? sub->help() : app.help());
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace ticketlab::cli
