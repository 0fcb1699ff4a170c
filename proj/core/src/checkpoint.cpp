#include "fseg/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "fseg/protocol.hpp"

namespace fseg {

uint32_t arch_hash(const Network& net) {
    const std::string s = net.arch_string();
    return crc32_ieee(reinterpret_cast<const uint8_t*>(s.data()), s.size());
}

void save_checkpoint(const Network& net, const std::string& prefix, int64_t steps) {
    const std::vector<uint8_t> blob = save_params(net);
    {
        std::ofstream f(prefix + ".params", std::ios::binary);
        if (!f) throw std::runtime_error("checkpoint: cannot write " + prefix + ".params");
        f.write(reinterpret_cast<const char*>(blob.data()), static_cast<long>(blob.size()));
    }
    std::ofstream meta(prefix + ".meta");
    if (!meta) throw std::runtime_error("checkpoint: cannot write " + prefix + ".meta");
    char hex[16];
    std::snprintf(hex, sizeof(hex), "%08x", arch_hash(net));
    meta << "arch_crc32=" << hex << "\n"
         << "param_count=" << net.param_count() << "\n"
         << "steps=" << steps << "\n";
}

void load_checkpoint(Network& net, const std::string& prefix) {
    std::ifstream meta(prefix + ".meta");
    if (!meta) throw std::runtime_error("checkpoint: missing " + prefix + ".meta");
    std::string line;
    std::string arch;
    size_t count = 0;
    while (std::getline(meta, line)) {
        const size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "arch_crc32") arch = value;
        else if (key == "param_count") count = std::stoull(value);
    }
    char hex[16];
    std::snprintf(hex, sizeof(hex), "%08x", arch_hash(net));
    if (arch != hex)
        throw std::runtime_error("checkpoint: architecture mismatch for " + prefix);
    if (count != net.param_count())
        throw std::runtime_error("checkpoint: parameter count mismatch for " + prefix);

    std::ifstream f(prefix + ".params", std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: missing " + prefix + ".params");
    std::vector<uint8_t> blob(net.param_count() * 4);
    f.read(reinterpret_cast<char*>(blob.data()), static_cast<long>(blob.size()));
    if (f.gcount() != static_cast<long>(blob.size()) || f.peek() != EOF)
        throw std::runtime_error("checkpoint: blob length mismatch for " + prefix);
    load_params(net, blob);
}

} // namespace fseg
