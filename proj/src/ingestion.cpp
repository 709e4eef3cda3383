#include "mpt/ingestion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>

namespace mpt::ingestion {

using nlohmann::json;

Format parse_format(const std::string& name) {
    if (name == "scicite-jsonl") return Format::SciCiteJsonl;
    if (name == "rct-lines") return Format::RctLines;
    if (name == "keyword-table") return Format::KeywordTable;
    if (name == "generic-jsonl") return Format::GenericJsonl;
    throw ConfigError("unknown format '" + name +
                      "' (scicite-jsonl, rct-lines, keyword-table, generic-jsonl)");
}

std::string format_name(Format format) {
    switch (format) {
        case Format::SciCiteJsonl: return "scicite-jsonl";
        case Format::RctLines: return "rct-lines";
        case Format::KeywordTable: return "keyword-table";
        case Format::GenericJsonl: return "generic-jsonl";
    }
    return "?";
}

AdapterConfig default_config(Format format, const core::LabelSpace& space) {
    AdapterConfig cfg;
    cfg.format = format;
    cfg.space = space;
    switch (format) {
        case Format::SciCiteJsonl:
            cfg.field_map = {{"text", "string"}, {"label", "label"}, {"id", "unique_id"}};
            break;
        case Format::RctLines:
            cfg.field_map = {{"text", "text"}, {"label", "label"}};
            break;
        case Format::KeywordTable:
            cfg.field_map = {{"text", "keyword"},
                             {"label", "label"},
                             {"title", "title"},
                             {"abstract", "abstract"}};
            break;
        case Format::GenericJsonl:
            cfg.field_map = {{"text", "text"}, {"label", "label"}, {"id", "id"}};
            break;
    }
    return cfg;
}

namespace {

std::string lowercase(std::string s) {
    for (char& c : s) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return s;
}

core::Label resolve_label(const std::string& raw, const AdapterConfig& cfg,
                          const std::string& path, long line) {
    if (auto l = cfg.space.find(raw)) return *l;
    if (auto alias = cfg.label_aliases.find(raw); alias != cfg.label_aliases.end()) {
        if (auto l = cfg.space.find(alias->second)) return *l;
    }
    const std::string lowered = lowercase(raw);
    for (const core::Label& l : cfg.space.labels()) {
        if (lowercase(l.name) == lowered) return l;
    }
    throw UnknownLabel(path + ":" + std::to_string(line) + ": unknown label '" + raw + "'");
}

const std::string& mapped(const AdapterConfig& cfg, const std::string& role) {
    auto it = cfg.field_map.find(role);
    if (it == cfg.field_map.end()) {
        throw ConfigError("field map has no entry for role '" + role + "'");
    }
    return it->second;
}

struct RawRecord {
    core::Instance instance;
    std::optional<std::string> label;
    long line = 0;
};

// --- jsonl (scicite + generic) ---------------------------------------------

std::vector<RawRecord> read_jsonl(const std::string& path, const AdapterConfig& cfg,
                                  bool need_label) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    const std::string& text_key = mapped(cfg, "text");
    const std::string& label_key = mapped(cfg, "label");
    const auto id_it = cfg.field_map.find("id");

    std::vector<RawRecord> records;
    std::string line;
    long line_no = 0;
    long ordinal = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path, line_no, e.what());
        }
        ++ordinal;
        RawRecord rec;
        rec.line = line_no;
        if (!j.contains(text_key) || !j.at(text_key).is_string()) {
            throw ParseError(path, line_no, "missing text field '" + text_key + "'");
        }
        rec.instance.text = j.at(text_key).get<std::string>();
        if (id_it != cfg.field_map.end() && j.contains(id_it->second) &&
            j.at(id_it->second).is_string()) {
            rec.instance.id = j.at(id_it->second).get<std::string>();
        } else {
            rec.instance.id = path + ":" + std::to_string(ordinal);
        }
        if (j.contains(label_key)) {
            if (!j.at(label_key).is_string()) {
                throw ParseError(path, line_no, "label field '" + label_key + "' is not a string");
            }
            rec.label = j.at(label_key).get<std::string>();
        } else if (need_label) {
            throw ParseError(path, line_no, "missing label field '" + label_key + "'");
        }
        for (const auto& [role, key] : cfg.field_map) {
            if (role == "text" || role == "label" || role == "id") continue;
            if (j.contains(key) && j.at(key).is_string()) {
                rec.instance.aux[role] = j.at(key).get<std::string>();
            }
        }
        records.push_back(std::move(rec));
    }
    return records;
}

// --- rct-lines ---------------------------------------------------------------
// "###<abstract id>" headers followed by "LABEL<TAB>sentence" lines; blank
// lines end an abstract. Sentence ids are "<abstract id>:<ordinal>".

std::vector<RawRecord> read_rct(const std::string& path, bool need_label) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    std::vector<RawRecord> records;
    std::string line;
    long line_no = 0;
    std::string abstract_id;
    long sentence = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            abstract_id.clear();
            continue;
        }
        if (line.rfind("###", 0) == 0) {
            abstract_id = line.substr(3);
            if (abstract_id.empty()) throw ParseError(path, line_no, "empty abstract id");
            sentence = 0;
            continue;
        }
        if (abstract_id.empty()) {
            throw ParseError(path, line_no, "sentence line before any ### header");
        }
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(path, line_no, "expected LABEL<TAB>text");
        }
        RawRecord rec;
        rec.line = line_no;
        rec.instance.id = abstract_id + ":" + std::to_string(++sentence);
        rec.instance.text = line.substr(tab + 1);
        std::string label = line.substr(0, tab);
        if (label.empty() && need_label) throw ParseError(path, line_no, "empty label");
        if (!label.empty()) rec.label = std::move(label);
        records.push_back(std::move(rec));
    }
    return records;
}

// --- keyword-table -----------------------------------------------------------
// Tab-separated with a header row naming the columns.

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::vector<RawRecord> read_keyword_table(const std::string& path, const AdapterConfig& cfg,
                                          bool need_label) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    std::string line;
    long line_no = 0;
    if (!std::getline(in, line)) throw ParseError(path, 1, "missing header row");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_tabs(line);
    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    };
    const auto text_col = column(mapped(cfg, "text"));
    if (!text_col) {
        throw ParseError(path, 1, "header has no column '" + mapped(cfg, "text") + "'");
    }
    const auto label_col = column(mapped(cfg, "label"));
    if (need_label && !label_col) {
        throw ParseError(path, 1, "header has no column '" + mapped(cfg, "label") + "'");
    }
    std::optional<std::size_t> id_col;
    if (auto it = cfg.field_map.find("id"); it != cfg.field_map.end()) id_col = column(it->second);

    std::vector<RawRecord> records;
    long ordinal = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_tabs(line);
        if (cells.size() != header.size()) {
            throw ParseError(path, line_no,
                             "row has " + std::to_string(cells.size()) + " cells, header has " +
                                 std::to_string(header.size()));
        }
        ++ordinal;
        RawRecord rec;
        rec.line = line_no;
        rec.instance.text = cells[*text_col];
        rec.instance.id = id_col ? cells[*id_col] : path + ":" + std::to_string(ordinal);
        if (label_col) {
            if (cells[*label_col].empty() && need_label) {
                throw ParseError(path, line_no, "empty label cell");
            }
            if (!cells[*label_col].empty()) rec.label = cells[*label_col];
        }
        for (const auto& [role, key] : cfg.field_map) {
            if (role == "text" || role == "label" || role == "id") continue;
            if (auto col = column(key)) rec.instance.aux[role] = cells[*col];
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<RawRecord> read_records(const std::string& path, const AdapterConfig& cfg,
                                    bool need_label) {
    switch (cfg.format) {
        case Format::SciCiteJsonl:
        case Format::GenericJsonl: return read_jsonl(path, cfg, need_label);
        case Format::RctLines: return read_rct(path, need_label);
        case Format::KeywordTable: return read_keyword_table(path, cfg, need_label);
    }
    throw ConfigError("unhandled format");
}

}  // namespace

core::Dataset load_dataset(const std::string& path, const AdapterConfig& cfg) {
    core::Dataset dataset;
    dataset.space = cfg.space;
    for (RawRecord& rec : read_records(path, cfg, /*need_label=*/true)) {
        core::Label label = resolve_label(*rec.label, cfg, path, rec.line);
        dataset.examples.push_back({std::move(rec.instance), std::move(label)});
    }
    return dataset;
}

core::UnlabeledPool load_pool(const std::string& path, const AdapterConfig& cfg) {
    core::UnlabeledPool pool;
    for (RawRecord& rec : read_records(path, cfg, /*need_label=*/false)) {
        pool.instances.push_back(std::move(rec.instance));
    }
    return pool;
}

void save_dataset(const core::Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (const core::LabeledExample& ex : dataset.examples) {
        json j;
        j["id"] = ex.instance.id;
        j["text"] = ex.instance.text;
        j["label"] = ex.label.name;
        for (const auto& [key, value] : ex.instance.aux) j[key] = value;
        out << j.dump() << "\n";
    }
}

void save_pool(const core::UnlabeledPool& pool, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (const core::Instance& inst : pool.instances) {
        json j;
        j["id"] = inst.id;
        j["text"] = inst.text;
        for (const auto& [key, value] : inst.aux) j[key] = value;
        out << j.dump() << "\n";
    }
}

Summary summarize(const core::Dataset& dataset) {
    Summary summary;
    summary.n = dataset.examples.size();
    summary.per_class = core::class_counts(dataset);
    if (summary.n == 0) {
        summary.distribution = Eigen::VectorXd::Zero(dataset.space.size());
    } else {
        summary.distribution = summary.per_class.cast<double>() / static_cast<double>(summary.n);
    }

    std::vector<int> lengths;
    lengths.reserve(dataset.examples.size());
    for (const core::LabeledExample& ex : dataset.examples) {
        int words = 0;
        bool in_word = false;
        for (char c : ex.instance.text) {
            const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
            if (!space && !in_word) ++words;
            in_word = !space;
        }
        lengths.push_back(words);
    }
    std::sort(lengths.begin(), lengths.end());
    auto rank = [&](double p) {
        if (lengths.empty()) return 0;
        const std::size_t r = static_cast<std::size_t>(
            std::max(1.0, std::ceil(p * static_cast<double>(lengths.size()))));
        return lengths[r - 1];
    };
    summary.length_p50 = rank(0.50);
    summary.length_p90 = rank(0.90);
    summary.length_max = lengths.empty() ? 0 : lengths.back();
    return summary;
}

std::string to_text(const Summary& summary, const core::LabelSpace& space) {
    std::ostringstream out;
    out << "examples: " << summary.n << "\n";
    for (int y = 0; y < space.size(); ++y) {
        out << "  " << space.at(y).name << ": " << summary.per_class[y];
        if (summary.n > 0) {
            out << " (" << static_cast<int>(summary.distribution[y] * 1000.0 + 0.5) / 10.0
                << "%)";
        }
        out << "\n";
    }
    out << "text length p50/p90/max: " << summary.length_p50 << "/" << summary.length_p90 << "/"
        << summary.length_max << "\n";
    return out.str();
}

}  // namespace mpt::ingestion
