#include "procwarm/metrics.hpp"

#include "procwarm/errors.hpp"
#include "procwarm/fsio.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace procwarm::train {

void RunMetrics::validate() const {
    std::map<std::string, std::uint64_t> last;
    for (const MetricRecord& r : records) {
        if (r.split != "train" && r.split != "eval") {
            throw ValidationError("unknown metrics split: " + r.split);
        }
        auto it = last.find(r.split);
        if (it != last.end() && r.step <= it->second) {
            throw ValidationError("metric steps must be strictly increasing within split " +
                                  r.split + ": step " + std::to_string(r.step) +
                                  " after " + std::to_string(it->second));
        }
        last[r.split] = r.step;
        if (!std::isfinite(r.loss)) {
            throw ValidationError("non-finite loss in metrics at step " + std::to_string(r.step));
        }
    }
}

double RunMetrics::final_accuracy(const std::string& split) const {
    for (auto it = records.rbegin(); it != records.rend(); ++it) {
        if (it->split == split) return it->accuracy;
    }
    throw ValidationError("metrics contain no records for split: " + split);
}

void write_metrics(const RunMetrics& m, const std::filesystem::path& path) {
    m.validate();
    std::ostringstream out;
    out << "# procwarm-metrics 1\n";
    out << "# run_id=" << m.run_id << "\n";
    out << "# config_hash=" << m.config_hash << "\n";
    for (const auto& [k, v] : m.meta) out << "# meta." << k << "=" << v << "\n";
    for (const MetricRecord& r : m.records) {
        out << "step=" << r.step << " split=" << r.split << " lr=" << format_double(r.lr)
            << " loss=" << format_double(r.loss) << " acc=" << format_double(r.accuracy)
            << " wall_ms=" << format_double(r.wall_ms) << "\n";
    }
    write_file_atomic(path, out.str());
}

namespace {

KvMap parse_record_line(const std::string& line) {
    KvMap kv;
    std::istringstream in(line);
    std::string field;
    while (in >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw FormatError("bad metrics field: " + field);
        kv[field.substr(0, eq)] = field.substr(eq + 1);
    }
    return kv;
}

}  // namespace

RunMetrics read_metrics(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    RunMetrics m;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            while (!body.empty() && body.front() == ' ') body.erase(body.begin());
            if (first && body.rfind("procwarm-metrics", 0) != 0) {
                throw FormatError("not a metrics file: " + path.string());
            }
            first = false;
            const auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = body.substr(0, eq);
            const std::string value = body.substr(eq + 1);
            if (key == "run_id") m.run_id = value;
            else if (key == "config_hash") m.config_hash = value;
            else if (key.rfind("meta.", 0) == 0) m.meta[key.substr(5)] = value;
            continue;
        }
        if (first) throw FormatError("not a metrics file: " + path.string());
        const KvMap kv = parse_record_line(line);
        MetricRecord r;
        r.step = kv_get_u64(kv, "step");
        r.split = kv_get(kv, "split");
        r.lr = kv_get_double(kv, "lr");
        r.loss = kv_get_double(kv, "loss");
        r.accuracy = kv_get_double(kv, "acc");
        r.wall_ms = kv_get_double(kv, "wall_ms");
        m.records.push_back(r);
    }
    m.validate();
    return m;
}

}  // namespace procwarm::train
