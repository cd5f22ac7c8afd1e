#include "landscape/ingest.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_map>

static_assert(std::endian::native == std::endian::little, "on-disk formats assume a little-endian host");

namespace landscape {

namespace fs = std::filesystem;

namespace {

constexpr char npy_magic[] = "\x93NUMPY";
constexpr std::size_t npy_magic_len = 6;

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "' for reading");
    }
    return in;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

enum class Dtype { f4, f8, i8 };

struct MatrixHeader {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Dtype dtype = Dtype::f8;
};

MatrixHeader parse_npy_dict(const std::string& dict, const fs::path& path) {
    auto fail = [&](const std::string& what) {
        return Error("malformed NPY header in '" + path.string() + "': " + what);
    };

    MatrixHeader header;
    std::smatch m;
    static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
    if (!std::regex_search(dict, m, descr_re)) {
        throw fail("missing 'descr'");
    }
    const std::string descr = m[1];
    if (descr == "<f8") {
        header.dtype = Dtype::f8;
    } else if (descr == "<f4") {
        header.dtype = Dtype::f4;
    } else if (descr == "<i8") {
        header.dtype = Dtype::i8;
    } else {
        throw fail("unsupported dtype '" + descr + "' (expected '<f4' or '<f8')");
    }

    static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
    if (!std::regex_search(dict, m, order_re)) {
        throw fail("missing 'fortran_order'");
    }
    if (m[1] == "True") {
        throw fail("fortran_order arrays are not supported");
    }

    static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
    if (!std::regex_search(dict, m, shape_re)) {
        throw fail("missing 'shape'");
    }
    std::vector<std::size_t> dims;
    std::stringstream ss(m[1].str());
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto first = item.find_first_not_of(" \t");
        if (first == std::string::npos) {
            continue;
        }
        auto last = item.find_last_not_of(" \t");
        std::string tok = item.substr(first, last - first + 1);
        if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
            throw fail("bad shape entry '" + tok + "'");
        }
        dims.push_back(std::stoull(tok));
    }
    if (dims.size() != 2) {
        throw fail("expected a 2-D array, got " + std::to_string(dims.size()) + " dimension(s)");
    }
    header.rows = dims[0];
    header.cols = dims[1];
    return header;
}

MatrixHeader read_npy_header(std::istream& in, const fs::path& path) {
    char magic[npy_magic_len];
    in.read(magic, npy_magic_len);
    if (!in || std::memcmp(magic, npy_magic, npy_magic_len) != 0) {
        throw Error("malformed NPY header in '" + path.string() + "': bad magic");
    }
    unsigned char version[2];
    in.read(reinterpret_cast<char*>(version), 2);
    std::size_t header_len = 0;
    if (version[0] == 1 && version[1] == 0) {
        unsigned char len[2];
        in.read(reinterpret_cast<char*>(len), 2);
        header_len = len[0] | (len[1] << 8);
    } else {
        throw Error("malformed NPY header in '" + path.string() + "': unsupported version " +
                    std::to_string(version[0]) + "." + std::to_string(version[1]));
    }
    std::string dict(header_len, '\0');
    in.read(dict.data(), static_cast<std::streamsize>(header_len));
    if (!in) {
        throw Error("malformed NPY header in '" + path.string() + "': truncated");
    }
    return parse_npy_dict(dict, path);
}

MatrixHeader read_raw_header(std::istream& in, const fs::path& path) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error("malformed raw header in '" + path.string() + "'");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed raw header in '" + path.string() + "': " + e.what());
    }
    if (!j.is_object() || !j.contains("n") || !j.contains("d") || !j["n"].is_number_unsigned() ||
        !j["d"].is_number_unsigned()) {
        throw Error("malformed raw header in '" + path.string() + "': need unsigned 'n' and 'd'");
    }
    if (j.value("dtype", std::string("f8")) != "f8") {
        throw Error("malformed raw header in '" + path.string() + "': dtype must be \"f8\"");
    }
    return {j["n"].get<std::size_t>(), j["d"].get<std::size_t>(), Dtype::f8};
}

MatrixHeader read_any_header(std::istream& in, const fs::path& path) {
    int first = in.peek();
    if (first == static_cast<unsigned char>(npy_magic[0])) {
        return read_npy_header(in, path);
    }
    if (first == '{') {
        return read_raw_header(in, path);
    }
    throw Error("'" + path.string() + "' is neither an NPY file nor a raw matrix");
}

void check_shape(const MatrixHeader& h, const fs::path& path) {
    if (h.rows < 2) {
        throw Error("'" + path.string() + "' has " + std::to_string(h.rows) + " row(s); at least 2 are required");
    }
    if (h.cols < 1) {
        throw Error("'" + path.string() + "' has zero columns");
    }
}

std::string npy_header_block(std::size_t rows, std::size_t cols, const char* descr = "<f8") {
    std::string dict = "{'descr': '" + std::string(descr) + "', 'fortran_order': False, 'shape': (" + std::to_string(rows) + ", " +
                       std::to_string(cols) + "), }";
    // magic(6) + version(2) + len(2) + dict + padding + '\n' is a multiple of 64
    std::size_t total = npy_magic_len + 4 + dict.size() + 1;
    std::size_t pad = (64 - total % 64) % 64;
    dict.append(pad, ' ');
    dict.push_back('\n');
    std::string out(npy_magic, npy_magic_len);
    out.push_back('\x01');
    out.push_back('\x00');
    out.push_back(static_cast<char>(dict.size() & 0xff));
    out.push_back(static_cast<char>((dict.size() >> 8) & 0xff));
    out += dict;
    return out;
}

std::string csv_unquote(std::string field) {
    while (!field.empty() && (field.back() == '\r' || field.back() == '\n')) {
        field.pop_back();
    }
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"') {
        std::string out;
        for (std::size_t i = 1; i + 1 < field.size(); ++i) {
            out.push_back(field[i]);
            if (field[i] == '"' && i + 2 < field.size() && field[i + 1] == '"') {
                ++i;
            }
        }
        return out;
    }
    return field;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
    return p.is_absolute() ? p : base / p;
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t n_points, std::size_t embed_dim, std::vector<double> data, int layer_id)
    : n_points_(n_points), embed_dim_(embed_dim), data_(std::move(data)), layer_id_(layer_id) {
    if (data_.size() != n_points_ * embed_dim_) {
        throw Error("matrix data has " + std::to_string(data_.size()) + " values, expected " +
                    std::to_string(n_points_) + "x" + std::to_string(embed_dim_));
    }
}

LabelKind label_kind_from_string(const std::string& s) {
    if (s == "subject") {
        return LabelKind::subject;
    }
    if (s == "answer") {
        return LabelKind::answer;
    }
    return LabelKind::custom;
}

std::string to_string(LabelKind kind) {
    switch (kind) {
    case LabelKind::subject:
        return "subject";
    case LabelKind::answer:
        return "answer";
    case LabelKind::custom:
        break;
    }
    return "custom";
}

LabelSet LabelSet::from_names(const std::vector<std::string>& row_names, LabelKind kind) {
    LabelSet out;
    out.kind = kind;
    out.ids.reserve(row_names.size());
    std::unordered_map<std::string, int> seen;
    for (std::size_t i = 0; i < row_names.size(); ++i) {
        const auto& name = row_names[i];
        if (name.empty()) {
            throw Error("empty category name at row " + std::to_string(i));
        }
        auto [it, inserted] = seen.try_emplace(name, static_cast<int>(out.names.size()));
        if (inserted) {
            out.names.push_back(name);
        }
        out.ids.push_back(it->second);
    }
    return out;
}

LabelSet LabelSet::from_ids(const std::vector<int>& raw_ids, LabelKind kind) {
    std::vector<std::string> names;
    names.reserve(raw_ids.size());
    for (int id : raw_ids) {
        names.push_back(std::to_string(id));
    }
    return from_names(names, kind);
}

EmbeddingMatrix load_embeddings(const fs::path& path) {
    auto in = open_in(path);
    MatrixHeader h = read_any_header(in, path);
    check_shape(h, path);

    if (h.dtype == Dtype::i8) {
        throw Error("'" + path.string() + "' holds integers; embeddings must be float32 or float64");
    }
    const std::size_t count = h.rows * h.cols;
    std::vector<double> data(count);
    if (h.dtype == Dtype::f8) {
        in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(double)));
    } else {
        std::vector<float> buf(count);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * sizeof(float)));
        std::copy(buf.begin(), buf.end(), data.begin());
    }
    if (!in) {
        throw Error("'" + path.string() + "' is truncated: expected " + std::to_string(h.rows) + "x" +
                    std::to_string(h.cols) + " values");
    }
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(data[i])) {
            throw Error("non-finite value in '" + path.string() + "' at row " + std::to_string(i / h.cols) +
                        ", column " + std::to_string(i % h.cols));
        }
    }
    return EmbeddingMatrix(h.rows, h.cols, std::move(data));
}

std::pair<std::size_t, std::size_t> peek_shape(const fs::path& path) {
    auto in = open_in(path);
    MatrixHeader h = read_any_header(in, path);
    check_shape(h, path);
    return {h.rows, h.cols};
}

void save_npy(const fs::path& path, const EmbeddingMatrix& matrix) {
    auto out = open_out(path);
    out << npy_header_block(matrix.n_points(), matrix.embed_dim());
    out.write(reinterpret_cast<const char*>(matrix.data().data()),
              static_cast<std::streamsize>(matrix.data().size() * sizeof(double)));
    if (!out) {
        throw Error("failed writing '" + path.string() + "'");
    }
}

void save_npy_int64(const fs::path& path, std::size_t rows, std::size_t cols, std::span<const std::int64_t> values) {
    if (values.size() != rows * cols) {
        throw Error("int64 array size does not match its shape");
    }
    auto out = open_out(path);
    out << npy_header_block(rows, cols, "<i8");
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    if (!out) {
        throw Error("failed writing '" + path.string() + "'");
    }
}

std::vector<std::int64_t> load_npy_int64(const fs::path& path, std::size_t& rows, std::size_t& cols) {
    auto in = open_in(path);
    MatrixHeader h = read_npy_header(in, path);
    if (h.dtype != Dtype::i8) {
        throw Error("'" + path.string() + "' is not an int64 array");
    }
    rows = h.rows;
    cols = h.cols;
    std::vector<std::int64_t> values(rows * cols);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(std::int64_t)));
    if (!in) {
        throw Error("'" + path.string() + "' is truncated");
    }
    return values;
}

void save_raw(const fs::path& path, const EmbeddingMatrix& matrix) {
    auto out = open_out(path);
    out << "{\"n\":" << matrix.n_points() << ",\"d\":" << matrix.embed_dim() << ",\"dtype\":\"f8\"}\n";
    out.write(reinterpret_cast<const char*>(matrix.data().data()),
              static_cast<std::streamsize>(matrix.data().size() * sizeof(double)));
    if (!out) {
        throw Error("failed writing '" + path.string() + "'");
    }
}

LabelSet read_labels(const fs::path& path, LabelKind kind) {
    auto in = open_in(path);
    std::vector<std::string> names;

    int first = in.peek();
    while (first == ' ' || first == '\n' || first == '\r' || first == '\t') {
        in.get();
        first = in.peek();
    }
    if (first == '[') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw Error("malformed label file '" + path.string() + "': " + e.what());
        }
        for (const auto& v : j) {
            if (v.is_string()) {
                names.push_back(v.get<std::string>());
            } else if (v.is_number_integer()) {
                names.push_back(std::to_string(v.get<long long>()));
            } else {
                throw Error("malformed label file '" + path.string() + "': entries must be strings or integers");
            }
        }
    } else {
        std::string line;
        bool header = true;
        while (std::getline(in, line)) {
            if (header) {
                header = false;
                continue;
            }
            if (line.empty() || line == "\r") {
                continue;
            }
            names.push_back(csv_unquote(line));
        }
    }
    try {
        return LabelSet::from_names(names, kind);
    } catch (const Error& e) {
        throw Error("label file '" + path.string() + "': " + e.what());
    }
}

LabelSet load_labels(const fs::path& path, std::size_t n_expected, LabelKind kind) {
    auto labels = read_labels(path, kind);
    if (labels.size() != n_expected) {
        throw Error("label file '" + path.string() + "' has " + std::to_string(labels.size()) + " rows, expected " +
                    std::to_string(n_expected));
    }
    return labels;
}

void save_labels_csv(const fs::path& path, const LabelSet& labels, const std::string& header) {
    auto out = open_out(path);
    out << header << '\n';
    for (int id : labels.ids) {
        out << csv_quote(labels.names.at(static_cast<std::size_t>(id))) << '\n';
    }
}

void save_labels_json(const fs::path& path, const LabelSet& labels) {
    nlohmann::json arr = nlohmann::json::array();
    for (int id : labels.ids) {
        arr.push_back(labels.names.at(static_cast<std::size_t>(id)));
    }
    auto out = open_out(path);
    out << arr.dump() << '\n';
}

Manifest load_manifest(const fs::path& path) {
    auto in = open_in(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed manifest '" + path.string() + "': " + e.what());
    }
    const fs::path base = path.parent_path();

    Manifest m;
    try {
        m.dataset = j.value("dataset", std::string{});
        m.n_points = j.value("n_points", std::size_t{0});
        for (const auto& layer : j.at("layers")) {
            m.layers.push_back({layer.at("layer_id").get<int>(), resolve(base, layer.at("path").get<std::string>())});
        }
        if (j.contains("labels")) {
            for (const auto& [name, p] : j["labels"].items()) {
                m.labels[name] = resolve(base, p.get<std::string>());
            }
        }
        if (j.contains("provenance")) {
            m.provenance = j["provenance"];
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed manifest '" + path.string() + "': " + e.what());
    }

    if (m.layers.empty()) {
        throw Error("manifest '" + path.string() + "' lists no layers");
    }
    for (std::size_t i = 1; i < m.layers.size(); ++i) {
        if (m.layers[i].layer_id <= m.layers[i - 1].layer_id) {
            throw Error("manifest '" + path.string() + "': layer ids must be strictly increasing (" +
                        std::to_string(m.layers[i - 1].layer_id) + " then " + std::to_string(m.layers[i].layer_id) +
                        ")");
        }
    }
    for (const auto& layer : m.layers) {
        auto [rows, cols] = peek_shape(layer.matrix);
        (void)cols;
        if (m.n_points == 0) {
            m.n_points = rows;
        } else if (rows != m.n_points) {
            throw Error("layer " + std::to_string(layer.layer_id) + " ('" + layer.matrix.string() + "') has " +
                        std::to_string(rows) + " rows, manifest declares " + std::to_string(m.n_points));
        }
    }
    for (const auto& [name, p] : m.labels) {
        if (!fs::exists(p)) {
            throw Error("manifest label set '" + name + "' points to missing file '" + p.string() + "'");
        }
    }
    return m;
}

void save_manifest(const fs::path& path, const Manifest& manifest) {
    const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    auto rel = [&](const fs::path& p) {
        if (p.is_relative()) {
            return p.generic_string();
        }
        auto r = p.lexically_relative(fs::absolute(base));
        if (r.empty() || *r.begin() == "..") {
            return p.generic_string();
        }
        return r.generic_string();
    };

    nlohmann::ordered_json j;
    j["dataset"] = manifest.dataset;
    j["n_points"] = manifest.n_points;
    j["layers"] = nlohmann::ordered_json::array();
    for (const auto& layer : manifest.layers) {
        j["layers"].push_back({{"layer_id", layer.layer_id}, {"path", rel(layer.matrix)}});
    }
    j["labels"] = nlohmann::ordered_json::object();
    for (const auto& [name, p] : manifest.labels) {
        j["labels"][name] = rel(p);
    }
    j["provenance"] = manifest.provenance;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

}  // namespace landscape
