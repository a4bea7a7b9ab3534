#include <spotsched/ingest.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace spotsched {

namespace {

constexpr std::string_view kMagic = "# spotsched-trace v1";

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

/// Splits one CSV record; double quotes protect commas and "" is a quote.
std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.emplace_back(trim(cur));
    return fields;
}

bool next_record(std::istream& in, std::string& line, std::size_t& lineno) {
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!trim(line).empty()) {
            return true;
        }
    }
    return false;
}

double parse_double(std::string_view text, std::string_view what, std::size_t lineno) {
    const std::string s(trim(text));
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw ParseError(fmt::format("line {}: bad {} '{}'", lineno, what, s));
    }
    return v;
}

std::size_t column(const std::vector<std::string>& header, std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw ParseError(fmt::format("missing column '{}'", name));
    }
    return static_cast<std::size_t>(it - header.begin());
}

struct Observation {
    double time;
    bool available;
};

/// Forward-fills observations onto a grid starting at the first one.
SpotTrace resample(const std::vector<Observation>& obs, double step, MetaMap meta) {
    const double t0 = obs.front().time;
    const auto steps = static_cast<std::size_t>(std::floor((obs.back().time - t0) / step + kEps)) + 1;
    std::vector<std::uint8_t> avail(steps, 0);
    std::size_t filled = 0;
    std::size_t j = 0;
    bool last = false;
    for (std::size_t i = 0; i < steps; ++i) {
        const double lo = t0 + static_cast<double>(i) * step;
        bool seen = j > 0 && obs[j - 1].time >= lo - kEps;
        while (j < obs.size() && obs[j].time <= lo + kEps) {
            last = obs[j].available;
            seen = true;
            ++j;
        }
        seen = seen || (j < obs.size() && obs[j].time < lo + step - kEps);
        filled += seen ? 0 : 1;
        avail[i] = last ? 1 : 0;
    }
    meta["filled_steps"] = std::to_string(filled);
    meta["origin"] = fmt::format("{}", t0);
    return SpotTrace(step, std::move(avail), std::move(meta));
}

void require_increasing(const std::vector<Observation>& obs, std::string_view source) {
    for (std::size_t i = 1; i < obs.size(); ++i) {
        if (obs[i].time == obs[i - 1].time) {
            throw ParseError(fmt::format("{}: duplicate timestamp {}", source, obs[i].time));
        }
        if (obs[i].time < obs[i - 1].time) {
            throw ParseError(fmt::format("{}: timestamps are not increasing at {}", source, obs[i].time));
        }
    }
}

bool parse_flag(std::string_view text, std::size_t lineno) {
    const std::string v = lower(trim(text));
    if (v == "1" || v == "true" || v == "up" || v == "yes") {
        return true;
    }
    if (v == "0" || v == "false" || v == "down" || v == "no") {
        return false;
    }
    throw ParseError(fmt::format("line {}: bad availability value '{}'", lineno, text));
}

}  // namespace

// ---------------------------------------------------------------------------
// Canonical format
// ---------------------------------------------------------------------------

void write_trace(const SpotTrace& trace, std::ostream& out) {
    out << kMagic << '\n';
    out << fmt::format("# step_seconds={:.17g}\n", trace.step_seconds());
    for (const auto& [k, v] : trace.meta()) {
        if (k.empty() || k.find_first_of("=\n\r") != std::string::npos || v.find_first_of("\n\r") != std::string::npos) {
            throw InvalidArgument(fmt::format("trace meta entry '{}' cannot be serialized", k));
        }
        out << "# " << k << '=' << v << '\n';
    }
    out << "index,available\n";
    const auto& a = trace.availability();
    std::string buf;
    buf.reserve(a.size() * 8);
    for (std::size_t i = 0; i < a.size(); ++i) {
        buf += std::to_string(i);
        buf += a[i] != 0 ? ",1\n" : ",0\n";
    }
    out << buf;
}

SpotTrace read_trace(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!next_record(in, line, lineno) || trim(line) != kMagic) {
        throw ParseError("not a canonical trace file (missing '# spotsched-trace v1')");
    }
    double step = 0.0;
    bool have_step = false;
    MetaMap meta;
    bool header = false;
    while (next_record(in, line, lineno)) {
        if (line.rfind('#', 0) != 0) {
            if (trim(line) != "index,available") {
                throw ParseError(fmt::format("line {}: expected header 'index,available'", lineno));
            }
            header = true;
            break;
        }
        const std::string_view body = trim(std::string_view(line).substr(1));
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(fmt::format("line {}: meta line without '='", lineno));
        }
        const std::string key(body.substr(0, eq));
        const std::string value(std::string_view(line).substr(line.find('=') + 1));
        if (key == "step_seconds") {
            step = parse_double(value, "step_seconds", lineno);
            have_step = true;
        } else {
            meta[key] = value;
        }
    }
    if (!have_step || !header) {
        throw ParseError("canonical trace lacks step_seconds or header");
    }
    std::vector<std::uint8_t> avail;
    while (next_record(in, line, lineno)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError(fmt::format("line {}: expected 'index,available'", lineno));
        }
        std::size_t index = 0;
        const std::string_view idx = trim(std::string_view(line).substr(0, comma));
        const auto [p, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), index);
        if (ec != std::errc{} || p != idx.data() + idx.size()) {
            throw ParseError(fmt::format("line {}: bad index '{}'", lineno, idx));
        }
        if (index != avail.size()) {
            throw ParseError(fmt::format("line {}: index {} breaks contiguity (expected {})", lineno, index,
                                         avail.size()));
        }
        const std::string_view v = trim(std::string_view(line).substr(comma + 1));
        if (v != "0" && v != "1") {
            throw ParseError(fmt::format("line {}: available must be 0 or 1, got '{}'", lineno, v));
        }
        avail.push_back(v == "1" ? 1 : 0);
    }
    if (avail.empty()) {
        throw ParseError("canonical trace has no rows");
    }
    return SpotTrace(step, std::move(avail), std::move(meta));
}

void save_trace(const SpotTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(fmt::format("cannot write '{}'", path.string()));
    }
    write_trace(trace, out);
}

SpotTrace load_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(fmt::format("cannot read '{}'", path.string()));
    }
    return read_trace(in);
}

// ---------------------------------------------------------------------------
// Timestamps and column mapping
// ---------------------------------------------------------------------------

double parse_timestamp(std::string_view text) {
    const std::string s(trim(text));
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (!s.empty() && end == s.c_str() + s.size() && std::isfinite(v)) {
        return v;
    }
    int y = 0;
    unsigned mo = 0;
    unsigned d = 0;
    int h = 0;
    int mi = 0;
    double sec = 0.0;
    char sep = 0;
    int consumed = 0;
    const int n = std::sscanf(s.c_str(), "%d-%u-%u%c%d:%d%n", &y, &mo, &d, &sep, &h, &mi, &consumed);
    if (n < 6 || (sep != 'T' && sep != ' ')) {
        throw ParseError(fmt::format("bad timestamp '{}'", s));
    }
    std::string_view rest = std::string_view(s).substr(static_cast<std::size_t>(consumed));
    if (!rest.empty() && rest.front() == ':') {
        const std::string tail(rest.substr(1));
        char* e = nullptr;
        sec = std::strtod(tail.c_str(), &e);
        rest = rest.substr(1 + static_cast<std::size_t>(e - tail.c_str()));
    }
    if (!(rest.empty() || rest == "Z" || rest == "+00:00" || rest == "+0000")) {
        throw ParseError(fmt::format("timestamp '{}' is not UTC", s));
    }
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0.0 || sec >= 61.0) {
        throw ParseError(fmt::format("bad timestamp '{}'", s));
    }
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(days) * 86400.0 + h * 3600.0 + mi * 60.0 + sec;
}

ColumnMapping parse_column_mapping(std::istream& in) {
    ColumnMapping m;
    std::string line;
    std::size_t lineno = 0;
    while (next_record(in, line, lineno)) {
        const std::string_view body = trim(line);
        if (body.front() == '#') {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(fmt::format("line {}: expected key=value", lineno));
        }
        const std::string key(trim(body.substr(0, eq)));
        const std::string value(trim(body.substr(eq + 1)));
        if (key == "timestamp") {
            m.timestamp = value;
        } else if (key == "label") {
            m.label = value;
        } else if (key == "provider") {
            m.provider = value;
        } else if (key == "region") {
            m.region = value;
        } else if (key == "zone") {
            m.zone = value;
        } else if (key == "instance") {
            m.instance = value;
        } else if (key == "step_seconds") {
            m.step_seconds = parse_double(value, "step_seconds", lineno);
            if (!(m.step_seconds > 0.0)) {
                throw ParseError("step_seconds must be positive");
            }
        } else {
            throw ParseError(fmt::format("line {}: unknown mapping key '{}'", lineno, key));
        }
    }
    return m;
}

ColumnMapping load_column_mapping(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(fmt::format("cannot read '{}'", path.string()));
    }
    return parse_column_mapping(in);
}

// ---------------------------------------------------------------------------
// Dataset parsers
// ---------------------------------------------------------------------------

SpotTrace parse_spotlake(std::istream& in, const SpotLakeSelector& selector, const ColumnMapping& columns) {
    std::string line;
    std::size_t lineno = 0;
    if (!next_record(in, line, lineno)) {
        throw ParseError("spotlake file is empty");
    }
    const auto header = split_csv(line);
    const std::size_t ts = column(header, columns.timestamp);
    const std::size_t lab = column(header, columns.label);
    struct Filter {
        std::size_t col;
        const std::string* want;
    };
    std::vector<Filter> filters;
    const std::pair<const std::string*, const std::string*> wanted[] = {{&columns.provider, &selector.provider},
                                                                         {&columns.region, &selector.region},
                                                                         {&columns.zone, &selector.zone},
                                                                         {&columns.instance, &selector.instance}};
    for (const auto& [name, want] : wanted) {
        if (!want->empty()) {
            filters.push_back({column(header, *name), want});
        }
    }

    std::vector<Observation> obs;
    while (next_record(in, line, lineno)) {
        const auto f = split_csv(line);
        if (f.size() != header.size()) {
            throw ParseError(fmt::format("line {}: expected {} fields, got {}", lineno, header.size(), f.size()));
        }
        const bool match = std::all_of(filters.begin(), filters.end(),
                                       [&](const Filter& flt) { return f[flt.col] == *flt.want; });
        if (!match) {
            continue;
        }
        const std::string label = lower(f[lab]);
        bool available = false;
        if (label == "high") {
            available = true;
        } else if (label != "medium" && label != "low") {
            throw ParseError(fmt::format("line {}: unknown availability label '{}'", lineno, f[lab]));
        }
        try {
            obs.push_back({parse_timestamp(f[ts]), available});
        } catch (const ParseError& e) {
            throw ParseError(fmt::format("line {}: {}", lineno, e.what()));
        }
    }
    if (obs.empty()) {
        throw ParseError("selector matches no spotlake rows");
    }
    require_increasing(obs, "spotlake");

    MetaMap meta{{"source", "spotlake"}};
    const std::pair<const char*, const std::string*> sel[] = {{"provider", &selector.provider},
                                                                {"region", &selector.region},
                                                                {"zone", &selector.zone},
                                                                {"instance", &selector.instance}};
    for (const auto& [k, v] : sel) {
        if (!v->empty()) {
            meta[k] = *v;
        }
    }
    return resample(obs, columns.step_seconds, std::move(meta));
}

SpotTrace parse_skypilot_availability(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!next_record(in, line, lineno)) {
        throw ParseError("availability file is empty");
    }
    const auto header = split_csv(line);
    const std::size_t ts = column(header, "timestamp");
    const std::size_t av = column(header, "available");
    std::vector<Observation> obs;
    while (next_record(in, line, lineno)) {
        const auto f = split_csv(line);
        if (f.size() != header.size()) {
            throw ParseError(fmt::format("line {}: expected {} fields, got {}", lineno, header.size(), f.size()));
        }
        try {
            obs.push_back({parse_timestamp(f[ts]), parse_flag(f[av], lineno)});
        } catch (const ParseError& e) {
            throw ParseError(fmt::format("line {}: {}", lineno, e.what()));
        }
    }
    if (obs.empty()) {
        throw ParseError("availability file has no rows");
    }
    require_increasing(obs, "availability log");
    return resample(obs, 600.0, {{"source", "skypilot-availability"}});
}

SpotTrace parse_skypilot_preemption(std::istream& in, double step_seconds, std::vector<std::string>* warnings) {
    if (!(step_seconds > 0.0)) {
        throw InvalidArgument("step_seconds must be positive");
    }
    std::string line;
    std::size_t lineno = 0;
    if (!next_record(in, line, lineno)) {
        throw ParseError("preemption file is empty");
    }
    const auto header = split_csv(line);
    const std::size_t sc = column(header, "start");
    const std::size_t lc = column(header, "lifetime");

    struct Life {
        double start;
        double end;
    };
    std::vector<Life> lives;
    std::size_t skipped = 0;
    while (next_record(in, line, lineno)) {
        const auto f = split_csv(line);
        if (f.size() != header.size()) {
            throw ParseError(fmt::format("line {}: expected {} fields, got {}", lineno, header.size(), f.size()));
        }
        const double start = parse_timestamp(f[sc]);
        const double life = parse_double(f[lc], "lifetime", lineno);
        if (life < 0.0) {
            throw ParseError(fmt::format("line {}: negative lifetime", lineno));
        }
        if (life == 0.0) {
            ++skipped;
            if (warnings != nullptr) {
                warnings->push_back(fmt::format("line {}: zero-length lifetime skipped", lineno));
            }
            continue;
        }
        lives.push_back({start, start + life});
    }
    if (lives.empty()) {
        throw ParseError("preemption file has no usable lifetimes");
    }
    std::sort(lives.begin(), lives.end(), [](const Life& a, const Life& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < lives.size(); ++i) {
        if (lives[i].start < lives[i - 1].end - kEps) {
            throw ParseError(fmt::format("lifetimes starting at {} and {} overlap", lives[i - 1].start, lives[i].start));
        }
    }

    const double origin = lives.front().start;
    double last_end = 0.0;
    for (const auto& l : lives) {
        last_end = std::max(last_end, l.end);
    }
    const auto steps = static_cast<std::size_t>(std::ceil((last_end - origin) / step_seconds - kEps));
    std::vector<std::uint8_t> avail(std::max<std::size_t>(steps, 1), 0);
    for (const auto& l : lives) {
        const auto first = static_cast<std::size_t>(std::ceil((l.start - origin) / step_seconds - kEps));
        const auto last = static_cast<std::size_t>(std::floor((l.end - origin) / step_seconds + kEps));
        for (std::size_t i = first; i < last && i < avail.size(); ++i) {
            avail[i] = 1;
        }
    }
    MetaMap meta{{"source", "skypilot-preemption"},
                 {"origin", fmt::format("{}", origin)},
                 {"skipped_rows", std::to_string(skipped)}};
    return SpotTrace(step_seconds, std::move(avail), std::move(meta));
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

TraceStats trace_stats(const SpotTrace& trace) {
    TraceStats s;
    const auto& a = trace.availability();
    s.horizon = a.size();
    std::size_t up = 0;
    for (std::size_t i = 0; i < a.size();) {
        std::size_t j = i;
        while (j < a.size() && a[j] == a[i]) {
            ++j;
        }
        const std::size_t len = j - i;
        if (a[i] != 0) {
            s.segment_lengths.push_back(len);
            up += len;
        } else {
            s.gap_lengths.push_back(len);
        }
        i = j;
    }
    s.fraction = s.horizon == 0 ? 0.0 : static_cast<double>(up) / static_cast<double>(s.horizon);
    s.segments = s.segment_lengths.size();
    s.gaps = s.gap_lengths.size();
    if (s.segments > 0) {
        s.mean_segment = static_cast<double>(up) / static_cast<double>(s.segments);
        s.max_segment = *std::max_element(s.segment_lengths.begin(), s.segment_lengths.end());
    }
    if (s.gaps > 0) {
        s.mean_gap = static_cast<double>(s.horizon - up) / static_cast<double>(s.gaps);
    }
    return s;
}

}  // namespace spotsched
