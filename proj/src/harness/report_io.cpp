#include "ticketlab/harness/report_io.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "ticketlab/errors.hpp"
#include "ticketlab/format.hpp"

namespace ticketlab::harness {
namespace {

constexpr std::string_view kMetricsHeader = "epoch,phase,train_loss,train_acc,val_acc,d_max,d_avg,active_r";
constexpr std::string_view kSummaryColumns =
    "search_epochs,converged,trigger_epoch,pre_pruned_acc,post_prune_acc,retrain_acc_after_1,restore_epochs,"
    "init_checksum";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string opt_text(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }
std::string opt_text(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

std::optional<double> opt_double(const std::string& s, std::size_t line) {
    if (s.empty()) return std::nullopt;
    return parse_double(s, line);
}

std::optional<int> opt_int(const std::string& s, std::size_t line) {
    if (s.empty()) return std::nullopt;
    return static_cast<int>(parse_int(s, line));
}

bool parse_bool(const std::string& s, std::size_t line) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw ParseError("expected true or false, got '" + s + "'", line);
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

// --- key/value document -----------------------------------------------------

struct Document {
    std::map<std::string, std::pair<std::string, std::size_t>> values;  // value, line
    std::string section;
    std::vector<std::pair<std::string, std::size_t>> rows;  // section lines incl. header

    const std::string& get(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) throw ParseError("missing key '" + key + "'", 0);
        return it->second.first;
    }
    std::size_t line_of(const std::string& key) const {
        auto it = values.find(key);
        return it == values.end() ? 0 : it->second.second;
    }
    double real(const std::string& key) const { return parse_double(get(key), line_of(key)); }
    int integer(const std::string& key) const { return static_cast<int>(parse_int(get(key), line_of(key))); }
    std::uint64_t u64(const std::string& key) const {
        return static_cast<std::uint64_t>(parse_size(get(key), line_of(key)));
    }
    bool boolean(const std::string& key) const { return parse_bool(get(key), line_of(key)); }
};

Document read_document(std::istream& in, std::string_view expected_kind) {
    Document doc;
    std::string line;
    std::size_t line_no = 0;
    bool in_section = false, section_closed = false, saw_version = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (in_section) {
            if (line == "[end]") {
                in_section = false;
                section_closed = true;
            } else {
                doc.rows.emplace_back(line, line_no);
            }
            continue;
        }
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            if (section_closed) throw ParseError("only one embedded table is allowed", line_no);
            doc.section = line.substr(1, line.size() - 2);
            in_section = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (!saw_version) {
            if (key != "schema_version") throw ParseError("report must start with schema_version", line_no);
            const auto version = static_cast<int>(parse_int(value, line_no));
            if (version != kSchemaVersion) throw SchemaVersionError(version, kSchemaVersion);
            saw_version = true;
        }
        if (!doc.values.emplace(key, std::make_pair(value, line_no)).second) {
            throw ParseError("duplicate key '" + key + "'", line_no);
        }
    }
    if (in.bad()) throw IoError("read failure");
    if (!saw_version) throw ParseError("missing schema_version", line_no);
    if (in_section) throw ParseError("unterminated table section", line_no);
    if (doc.get("kind") != expected_kind) {
        throw ParseError("expected report kind '" + std::string(expected_kind) + "', found '" + doc.get("kind") + "'",
                         doc.line_of("kind"));
    }
    return doc;
}

void write_config(std::ostream& out, const std::string& prefix, const search::SearchConfig& c) {
    out << prefix << ".mode=" << search::to_string(c.mode) << '\n'
        << prefix << ".p=" << format_double(c.p) << '\n'
        << prefix << ".s=" << format_double(c.s) << '\n'
        << prefix << ".delta=" << format_double(c.delta) << '\n'
        << prefix << ".window=" << c.window << '\n'
        << prefix << ".r_trunc=" << format_double(c.r_trunc) << '\n'
        << prefix << ".max_epochs=" << c.max_epochs << '\n'
        << prefix << ".lr=" << format_double(c.lr) << '\n'
        << prefix << ".seed=" << c.seed << '\n';
}

search::SearchConfig read_config(const Document& doc, const std::string& prefix) {
    search::SearchConfig c;
    try {
        c.mode = search::parse_search_mode(doc.get(prefix + ".mode"));
    } catch (const ConfigError& e) {
        throw ParseError(e.what(), doc.line_of(prefix + ".mode"));
    }
    c.p = doc.real(prefix + ".p");
    c.s = doc.real(prefix + ".s");
    c.delta = doc.real(prefix + ".delta");
    c.window = doc.integer(prefix + ".window");
    c.r_trunc = doc.real(prefix + ".r_trunc");
    c.max_epochs = doc.integer(prefix + ".max_epochs");
    c.lr = doc.real(prefix + ".lr");
    c.seed = doc.u64(prefix + ".seed");
    return c;
}

std::string summary_cells(const RunSummary& s) {
    return std::to_string(s.search_epochs) + ',' + bool_text(s.converged) + ',' + opt_text(s.trigger_epoch) + ',' +
           format_double(s.pre_pruned_acc) + ',' + format_double(s.post_prune_acc) + ',' +
           format_double(s.retrain_acc_after_1) + ',' + opt_text(s.restore_epochs) + ',' +
           std::to_string(s.init_checksum);
}

RunSummary parse_summary(const std::vector<std::string>& cells, std::size_t first, std::size_t line) {
    RunSummary s;
    s.search_epochs = static_cast<int>(parse_int(cells[first], line));
    s.converged = parse_bool(cells[first + 1], line);
    s.trigger_epoch = opt_int(cells[first + 2], line);
    s.pre_pruned_acc = parse_double(cells[first + 3], line);
    s.post_prune_acc = parse_double(cells[first + 4], line);
    s.retrain_acc_after_1 = parse_double(cells[first + 5], line);
    s.restore_epochs = opt_int(cells[first + 6], line);
    s.init_checksum = static_cast<std::uint64_t>(parse_size(cells[first + 7], line));
    return s;
}

std::string prefixed_columns(std::string_view prefix) {
    std::string out;
    std::istringstream in{std::string(kSummaryColumns)};
    std::string col;
    while (std::getline(in, col, ',')) {
        if (!out.empty()) out += ',';
        out += std::string(prefix) + col;
    }
    return out;
}

/// Validates section name and header, returns data rows split into cells.
std::vector<std::pair<std::vector<std::string>, std::size_t>> table_rows(const Document& doc,
                                                                         std::string_view section,
                                                                         std::string_view header) {
    if (doc.section != section) throw ParseError("missing [" + std::string(section) + "] table", 0);
    if (doc.rows.empty() || doc.rows.front().first != header) {
        throw ParseError("unexpected table header", doc.rows.empty() ? 0 : doc.rows.front().second);
    }
    const auto width = split_csv(std::string(header)).size();
    std::vector<std::pair<std::vector<std::string>, std::size_t>> out;
    for (std::size_t i = 1; i < doc.rows.size(); ++i) {
        auto cells = split_csv(doc.rows[i].first);
        if (cells.size() != width) {
            throw ParseError("expected " + std::to_string(width) + " cells, got " + std::to_string(cells.size()),
                             doc.rows[i].second);
        }
        out.emplace_back(std::move(cells), doc.rows[i].second);
    }
    return out;
}

void write_metrics_rows(std::ostream& out, const std::vector<EpochMetrics>& metrics) {
    out << kMetricsHeader << '\n';
    for (const auto& m : metrics) {
        out << m.epoch << ',' << to_string(m.phase) << ',' << format_double(m.train_loss) << ','
            << format_double(m.train_acc) << ',' << format_double(m.val_acc) << ',' << opt_text(m.d_max) << ','
            << opt_text(m.d_avg) << ',' << format_double(m.active_r) << '\n';
    }
}

EpochMetrics parse_metrics_row(const std::vector<std::string>& cells, std::size_t line) {
    EpochMetrics m;
    m.epoch = static_cast<int>(parse_int(cells[0], line));
    if (cells[1] == "search") m.phase = MetricsPhase::kSearch;
    else if (cells[1] == "retrain") m.phase = MetricsPhase::kRetrain;
    else throw ParseError("unknown phase '" + cells[1] + "'", line);
    m.train_loss = parse_double(cells[2], line);
    m.train_acc = parse_double(cells[3], line);
    m.val_acc = parse_double(cells[4], line);
    m.d_max = opt_double(cells[5], line);
    m.d_avg = opt_double(cells[6], line);
    m.active_r = parse_double(cells[7], line);
    if ((m.phase == MetricsPhase::kSearch) != (m.d_max.has_value() && m.d_avg.has_value())) {
        throw ParseError("d_max/d_avg must be present exactly on search rows", line);
    }
    return m;
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    writer(out);
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::ifstream open_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<EpochMetrics>& metrics) {
    write_metrics_rows(out, metrics);
}

std::vector<EpochMetrics> read_metrics_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != kMetricsHeader) throw ParseError("unexpected metrics header", 1);
    std::vector<EpochMetrics> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 8) throw ParseError("metrics rows have 8 cells", line_no);
        out.push_back(parse_metrics_row(cells, line_no));
    }
    return out;
}

void write_report(std::ostream& out, const ExperimentReport& r) {
    out << "schema_version=" << kSchemaVersion << '\n' << "kind=experiment\n";
    out << "arch=" << r.arch << '\n' << "dataset=" << r.dataset << '\n';
    write_config(out, "config", r.config);
    out << "retrain_budget=" << r.retrain_budget << '\n'
        << "init_checksum=" << r.init_checksum << '\n'
        << "search_epochs=" << r.search_epochs << '\n'
        << "converged=" << bool_text(r.converged) << '\n'
        << "trigger_epoch=" << opt_text(r.trigger_epoch) << '\n'
        << "pre_pruned_acc=" << format_double(r.pre_pruned_acc) << '\n'
        << "post_prune_acc=" << format_double(r.post_prune_acc) << '\n'
        << "retrain_acc_after_1=" << format_double(r.retrain_acc_after_1) << '\n'
        << "restore_epochs=" << opt_text(r.restore_epochs) << '\n'
        << "retrain_diverged=" << bool_text(r.retrain_diverged) << '\n';
    out << "[metrics]\n";
    write_metrics_rows(out, r.metrics);
    out << "[end]\n";
}

ExperimentReport read_experiment_report(std::istream& in) {
    const auto doc = read_document(in, "experiment");
    ExperimentReport r;
    r.arch = doc.get("arch");
    r.dataset = doc.get("dataset");
    r.config = read_config(doc, "config");
    r.retrain_budget = doc.integer("retrain_budget");
    r.init_checksum = doc.u64("init_checksum");
    r.search_epochs = doc.integer("search_epochs");
    r.converged = doc.boolean("converged");
    r.trigger_epoch = opt_int(doc.get("trigger_epoch"), doc.line_of("trigger_epoch"));
    r.pre_pruned_acc = doc.real("pre_pruned_acc");
    r.post_prune_acc = doc.real("post_prune_acc");
    r.retrain_acc_after_1 = doc.real("retrain_acc_after_1");
    r.restore_epochs = opt_int(doc.get("restore_epochs"), doc.line_of("restore_epochs"));
    r.retrain_diverged = doc.boolean("retrain_diverged");
    for (const auto& [cells, line] : table_rows(doc, "metrics", kMetricsHeader)) {
        r.metrics.push_back(parse_metrics_row(cells, line));
    }
    return r;
}

void write_report(std::ostream& out, const ComparisonReport& r) {
    out << "schema_version=" << kSchemaVersion << '\n' << "kind=comparison\n";
    out << "arch=" << r.arch << '\n' << "dataset=" << r.dataset << '\n';
    write_config(out, "eb_config", r.eb_config);
    write_config(out, "worm_config", r.worm_config);
    out << "retrain_budget=" << r.retrain_budget << '\n';
    out << "[rows]\n";
    out << "seed," << prefixed_columns("eb_") << ',' << prefixed_columns("worm_") << '\n';
    for (const auto& row : r.rows) {
        out << row.seed << ',' << summary_cells(row.eb) << ',' << summary_cells(row.worm) << '\n';
    }
    out << "[end]\n";
}

ComparisonReport read_comparison_report(std::istream& in) {
    const auto doc = read_document(in, "comparison");
    ComparisonReport r;
    r.arch = doc.get("arch");
    r.dataset = doc.get("dataset");
    r.eb_config = read_config(doc, "eb_config");
    r.worm_config = read_config(doc, "worm_config");
    r.retrain_budget = doc.integer("retrain_budget");
    const std::string header = "seed," + prefixed_columns("eb_") + ',' + prefixed_columns("worm_");
    for (const auto& [cells, line] : table_rows(doc, "rows", header)) {
        PairedRow row;
        row.seed = static_cast<std::uint64_t>(parse_size(cells[0], line));
        row.eb = parse_summary(cells, 1, line);
        row.worm = parse_summary(cells, 9, line);
        r.rows.push_back(row);
    }
    return r;
}

void write_report(std::ostream& out, const SweepReport& r) {
    out << "schema_version=" << kSchemaVersion << '\n' << "kind=sweep\n";
    out << "arch=" << r.arch << '\n' << "dataset=" << r.dataset << '\n';
    write_config(out, "base_config", r.base_config);
    out << "retrain_budget=" << r.retrain_budget << '\n';
    out << "[rows]\n";
    out << "r," << kSummaryColumns << '\n';
    for (const auto& row : r.rows) out << format_double(row.r) << ',' << summary_cells(row.summary) << '\n';
    out << "[end]\n";
}

SweepReport read_sweep_report(std::istream& in) {
    const auto doc = read_document(in, "sweep");
    SweepReport r;
    r.arch = doc.get("arch");
    r.dataset = doc.get("dataset");
    r.base_config = read_config(doc, "base_config");
    r.retrain_budget = doc.integer("retrain_budget");
    for (const auto& [cells, line] : table_rows(doc, "rows", "r," + std::string(kSummaryColumns))) {
        r.rows.push_back({parse_double(cells[0], line), parse_summary(cells, 1, line)});
    }
    return r;
}

template <typename Report>
void persist(const Report& report, const std::filesystem::path& path) {
    write_file(path, [&](std::ostream& out) { write_report(out, report); });
}

template void persist(const ExperimentReport&, const std::filesystem::path&);
template void persist(const ComparisonReport&, const std::filesystem::path&);
template void persist(const SweepReport&, const std::filesystem::path&);

ExperimentReport load_experiment_report(const std::filesystem::path& path) {
    auto in = open_file(path);
    return read_experiment_report(in);
}

ComparisonReport load_comparison_report(const std::filesystem::path& path) {
    auto in = open_file(path);
    return read_comparison_report(in);
}

SweepReport load_sweep_report(const std::filesystem::path& path) {
    auto in = open_file(path);
    return read_sweep_report(in);
}

void save_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& metrics) {
    write_file(path, [&](std::ostream& out) { write_metrics_rows(out, metrics); });
}

std::vector<EpochMetrics> load_metrics_csv(const std::filesystem::path& path) {
    auto in = open_file(path);
    return read_metrics_csv(in);
}

}  // namespace ticketlab::harness
