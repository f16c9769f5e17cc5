#include "ocelad/io.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ocelad {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = line.find(sep, pos);
        out.push_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        if (next == std::string_view::npos)
            return out;
        pos = next + 1;
    }
}

std::string_view trim_cr(std::string_view s) {
    if (!s.empty() && s.back() == '\r')
        s.remove_suffix(1);
    return s;
}

template <class T>
bool parse_number(std::string_view text, T &out) {
    const auto *first = text.data();
    const auto *last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

std::string csv_quote(const std::string &s) {
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

} // namespace

void write_constraints_csv(std::ostream &out, const std::vector<Constraint> &constraints) {
    const Eigen::Index n = constraints.empty() ? 0 : constraints.front().dim();
    out << "t,y";
    for (Eigen::Index i = 0; i < n; ++i)
        out << ",x_" << i;
    for (Eigen::Index i = 0; i < n; ++i)
        out << ",z_" << i;
    out << '\n';
    for (const auto &c : constraints) {
        if (c.dim() != n || c.z.size() != n)
            throw std::invalid_argument("constraint stream mixes dimensions");
        out << c.t << ',' << c.y;
        for (Eigen::Index i = 0; i < n; ++i)
            out << ',' << format_double(c.x(i));
        for (Eigen::Index i = 0; i < n; ++i)
            out << ',' << format_double(c.z(i));
        out << '\n';
    }
}

void write_constraints_csv(const std::filesystem::path &path, const std::vector<Constraint> &constraints) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    write_constraints_csv(out, constraints);
}

std::vector<Constraint> read_constraints_csv(std::istream &in, const std::string &source) {
    std::vector<Constraint> out;
    std::string line;
    std::size_t line_no = 0;
    Eigen::Index n = -1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = trim_cr(line);
        if (row.empty())
            continue;
        const auto fields = split(row, ',');
        if (n < 0) {
            if (fields.size() < 2 || fields[0] != "t" || fields[1] != "y" || fields.size() % 2 != 0)
                throw FormatError(source, line_no, "expected header t,y,x_0..x_{n-1},z_0..z_{n-1}");
            n = static_cast<Eigen::Index>((fields.size() - 2) / 2);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (fields[static_cast<std::size_t>(2 + i)] != "x_" + std::to_string(i) ||
                    fields[static_cast<std::size_t>(2 + n + i)] != "z_" + std::to_string(i))
                    throw FormatError(source, line_no, "unexpected column name in header");
            }
            continue;
        }
        if (static_cast<Eigen::Index>(fields.size()) != 2 + 2 * n)
            throw FormatError(source, line_no,
                              "expected " + std::to_string(2 + 2 * n) + " fields, found " +
                                  std::to_string(fields.size()));
        Constraint c;
        if (!parse_number(fields[0], c.t) || c.t < 1)
            throw FormatError(source, line_no, "bad step index '" + std::string(fields[0]) + "'");
        if (!parse_number(fields[1], c.y) || (c.y != 1 && c.y != -1))
            throw FormatError(source, line_no, "label must be 1 or -1");
        c.x.resize(n);
        c.z.resize(n);
        for (Eigen::Index i = 0; i < 2 * n; ++i) {
            double v = 0.0;
            const auto field = fields[static_cast<std::size_t>(2 + i)];
            if (!parse_number(field, v) || !std::isfinite(v))
                throw FormatError(source, line_no, "bad coordinate '" + std::string(field) + "'");
            (i < n ? c.x(i) : c.z(i - n)) = v;
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<Constraint> ingest_constraints(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(path.string(), 0, "cannot open file");
    return read_constraints_csv(in, path.string());
}

void write_step_csv(std::ostream &out, const std::vector<StepRecord> &records) {
    out << kStepHeader << '\n';
    for (const auto &r : records) {
        std::string levels;
        json weights = json::object();
        for (const auto &iv : r.intervals) {
            if (!levels.empty())
                levels += ';';
            levels += std::to_string(iv.level);
            weights[std::to_string(iv.level)] = iv.weight;
        }
        out << r.trial << ',' << r.t << ',' << format_double(r.combined_loss) << ','
            << format_double(r.knn_error) << ',' << format_double(r.nmi) << ',' << levels << ','
            << csv_quote(weights.dump()) << '\n';
    }
}

void write_aggregate_csv(std::ostream &out, const std::vector<AggregateRow> &rows) {
    out << kAggregateHeader << '\n';
    for (const auto &r : rows)
        out << r.t << ',' << format_double(r.mean_knn_error) << ',' << format_double(r.p_nmi_exceeds)
            << ',' << format_double(r.mean_combined_loss) << '\n';
}

void save_checkpoint(const std::filesystem::path &path, const json &checkpoint) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        out << checkpoint.dump() << '\n';
        if (!out)
            throw std::runtime_error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

json load_checkpoint(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(path.string(), 0, "cannot open checkpoint");
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw FormatError(path.string(), 0, std::string("corrupted checkpoint: ") + e.what());
    }
}

} // namespace ocelad
