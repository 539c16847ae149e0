#include "ssnn/netio.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ssnn/fault.hpp"

namespace ssnn {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream in(line);
    std::string t;
    while (in >> t) {
        if (t[0] == '#') break;
        toks.push_back(t);
    }
    return toks;
}

double to_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::runtime_error("network spec: bad numeric value '" + s + "' for " + key);
    }
}

std::size_t to_size(const std::string& s, const std::string& key) {
    const double v = to_double(s, key);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw std::runtime_error("network spec: expected non-negative integer for " + key);
    return static_cast<std::size_t>(v);
}

} // namespace

std::string serialize_network_spec(const NetworkSpec& spec) {
    std::ostringstream out;
    out << "input " << spec.input.c << " " << spec.input.h << " " << spec.input.w << "\n";
    out << "time_steps " << spec.time_steps << "\n";
    out << "classes " << spec.classes << "\n";
    for (const LayerSpec& l : spec.layers) {
        switch (l.kind) {
        case LayerKind::Convolution:
            out << "layer conv in " << l.in_channels << " out " << l.out_channels << " kernel "
                << l.kernel << " stride " << l.stride << " pad " << l.pad;
            if (l.affine) out << " affine 1";
            out << "\n";
            break;
        case LayerKind::FullyConnected:
            out << "layer fc in " << l.fc_in << " out " << l.fc_out;
            if (l.affine) out << " affine 1";
            out << "\n";
            break;
        case LayerKind::Pooling:
            out << "layer pool kernel " << l.pool_kernel << "\n";
            break;
        case LayerKind::Spiking:
            out << "layer plif v_threshold " << fmt_double(l.plif.v_threshold) << " tau_param "
                << fmt_double(l.plif.tau_param) << " v_rest " << fmt_double(l.plif.v_rest)
                << " gamma " << fmt_double(l.plif.gamma) << "\n";
            break;
        case LayerKind::Dropout:
            out << "layer dropout rate " << fmt_double(l.dropout_rate) << "\n";
            break;
        }
    }
    return out.str();
}

NetworkSpec parse_network_spec(std::istream& in) {
    NetworkSpec spec;
    bool have_input = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto toks = tokenize(line);
        if (toks.empty()) continue;
        const std::string& head = toks[0];
        auto fail = [&](const std::string& msg) -> std::runtime_error {
            return std::runtime_error("network spec line " + std::to_string(lineno) + ": " + msg);
        };
        if (head == "input") {
            if (toks.size() != 4) throw fail("input wants 3 values: channels height width");
            spec.input = {to_size(toks[1], "input"), to_size(toks[2], "input"),
                          to_size(toks[3], "input")};
            have_input = true;
        } else if (head == "time_steps") {
            if (toks.size() != 2) throw fail("time_steps wants one value");
            spec.time_steps = to_size(toks[1], "time_steps");
        } else if (head == "classes") {
            if (toks.size() != 2) throw fail("classes wants one value");
            spec.classes = to_size(toks[1], "classes");
        } else if (head == "layer") {
            if (toks.size() < 2) throw fail("layer wants a kind");
            const std::string& kind = toks[1];
            if ((toks.size() - 2) % 2 != 0) throw fail("layer keys must come in key/value pairs");
            LayerSpec l;
            if (kind == "conv") {
                l.kind = LayerKind::Convolution;
                l.stride = 1;
                l.pad = 0;
            } else if (kind == "fc") {
                l.kind = LayerKind::FullyConnected;
            } else if (kind == "pool") {
                l.kind = LayerKind::Pooling;
            } else if (kind == "plif") {
                l.kind = LayerKind::Spiking;
            } else if (kind == "dropout") {
                l.kind = LayerKind::Dropout;
            } else {
                throw fail("unknown layer kind '" + kind + "'");
            }
            for (std::size_t i = 2; i + 1 < toks.size(); i += 2) {
                const std::string& key = toks[i];
                const std::string& val = toks[i + 1];
                if (kind == "conv" && key == "in") l.in_channels = to_size(val, key);
                else if (kind == "conv" && key == "out") l.out_channels = to_size(val, key);
                else if (kind == "conv" && key == "kernel") l.kernel = to_size(val, key);
                else if (kind == "conv" && key == "stride") l.stride = to_size(val, key);
                else if (kind == "conv" && key == "pad") l.pad = to_size(val, key);
                else if ((kind == "conv" || kind == "fc") && key == "affine")
                    l.affine = to_size(val, key) != 0;
                else if (kind == "fc" && key == "in") l.fc_in = to_size(val, key);
                else if (kind == "fc" && key == "out") l.fc_out = to_size(val, key);
                else if (kind == "pool" && key == "kernel") l.pool_kernel = to_size(val, key);
                else if (kind == "plif" && key == "v_threshold") l.plif.v_threshold = to_double(val, key);
                else if (kind == "plif" && key == "tau_param") l.plif.tau_param = to_double(val, key);
                else if (kind == "plif" && key == "v_rest") l.plif.v_rest = to_double(val, key);
                else if (kind == "plif" && key == "gamma") l.plif.gamma = to_double(val, key);
                else if (kind == "dropout" && key == "rate") l.dropout_rate = to_double(val, key);
                else throw fail("unknown key '" + key + "' for layer kind '" + kind + "'");
            }
            spec.layers.push_back(l);
        } else {
            throw fail("unknown directive '" + head + "'");
        }
    }
    if (!have_input) throw std::runtime_error("network spec: missing 'input' line");
    spec.validate();
    return spec;
}

NetworkSpec parse_network_spec_string(const std::string& text) {
    std::istringstream in(text);
    return parse_network_spec(in);
}

NetworkSpec load_network_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open network spec '" + path + "'");
    return parse_network_spec(in);
}

void save_network_spec(const NetworkSpec& spec, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write network spec '" + path + "'");
    out << serialize_network_spec(spec);
}

namespace {

constexpr char kWeightsMagic[8] = {'S', 'S', 'N', 'N', 'W', 'T', 'S', '1'};

struct TensorEntry {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset; // in doubles, into the blob
};

} // namespace

void save_params(const NetworkSpec& spec, const NetworkParams& params, const std::string& path) {
    spec.validate();
    nlohmann::ordered_json header;
    header["tensors"] = nlohmann::ordered_json::array();
    std::vector<double> blob;

    auto add = [&](const std::string& name, const std::vector<std::size_t>& shape,
                   const double* data, std::size_t n) {
        nlohmann::ordered_json t;
        t["name"] = name;
        t["dtype"] = "f64";
        t["shape"] = shape;
        t["offset"] = blob.size() * sizeof(double);
        header["tensors"].push_back(t);
        blob.insert(blob.end(), data, data + n);
    };

    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const std::string base = "layer" + std::to_string(li);
        if (!params.weight[li].empty())
            add(base + ".weight", params.weight[li].shape(), params.weight[li].data(),
                params.weight[li].size());
        if (!params.scale[li].empty())
            add(base + ".scale", params.scale[li].shape(), params.scale[li].data(),
                params.scale[li].size());
        if (!params.shift[li].empty())
            add(base + ".shift", params.shift[li].shape(), params.shift[li].data(),
                params.shift[li].size());
        if (spec.layers[li].kind == LayerKind::Spiking) {
            add(base + ".tau_param", {1}, &params.tau_param[li], 1);
            add(base + ".v_threshold", {1}, &params.v_threshold[li], 1);
        }
    }

    const std::string htext = header.dump();
    const std::uint64_t hlen = htext.size();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write weights '" + path + "'");
    out.write(kWeightsMagic, 8);
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    out.write(reinterpret_cast<const char*>(blob.data()),
              static_cast<std::streamsize>(blob.size() * sizeof(double)));
    if (!out) throw std::runtime_error("short write to '" + path + "'");
}

NetworkParams load_params(const NetworkSpec& spec, const std::string& path) {
    spec.validate();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open weights '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kWeightsMagic, 8) != 0)
        throw std::runtime_error("weights '" + path + "': bad magic");
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw std::runtime_error("weights '" + path + "': truncated header");
    nlohmann::json header = nlohmann::json::parse(htext);

    std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (bytes.size() % sizeof(double) != 0)
        throw std::runtime_error("weights '" + path + "': blob is not a whole number of f64");
    std::vector<double> blob(bytes.size() / sizeof(double));
    std::memcpy(blob.data(), bytes.data(), bytes.size());

    NetworkParams params = init_params(spec, 0);
    auto fetch = [&](const std::string& name, double* dst, std::size_t n,
                     const std::vector<std::size_t>& want_shape) {
        for (const auto& t : header["tensors"]) {
            if (t["name"] != name) continue;
            const auto shape = t["shape"].get<std::vector<std::size_t>>();
            if (shape != want_shape)
                throw std::runtime_error("weights '" + path + "': tensor " + name +
                                         " has unexpected shape");
            const std::size_t off = t["offset"].get<std::size_t>();
            if (off % sizeof(double) != 0 || off / sizeof(double) + n > blob.size())
                throw std::runtime_error("weights '" + path + "': tensor " + name +
                                         " offset out of range");
            std::memcpy(dst, blob.data() + off / sizeof(double), n * sizeof(double));
            return;
        }
        throw std::runtime_error("weights '" + path + "': missing tensor " + name);
    };

    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const std::string base = "layer" + std::to_string(li);
        if (!params.weight[li].empty())
            fetch(base + ".weight", params.weight[li].data(), params.weight[li].size(),
                  params.weight[li].shape());
        if (!params.scale[li].empty())
            fetch(base + ".scale", params.scale[li].data(), params.scale[li].size(),
                  params.scale[li].shape());
        if (!params.shift[li].empty())
            fetch(base + ".shift", params.shift[li].data(), params.shift[li].size(),
                  params.shift[li].shape());
        if (spec.layers[li].kind == LayerKind::Spiking) {
            fetch(base + ".tau_param", &params.tau_param[li], 1, {1});
            fetch(base + ".v_threshold", &params.v_threshold[li], 1, {1});
        }
    }
    return params;
}

void save_fault_map(const FaultMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write fault map '" + path + "'");
    out << map.serialize();
}

FaultMap load_fault_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open fault map '" + path + "'");
    return FaultMap::parse(in);
}

} // namespace ssnn
