#include "judgebias/assets.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "judgebias/rng.hpp"

namespace judgebias::assets {

std::string content_hash(std::string_view content) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(rng::fnv1a64(content)));
    return std::string(buf);
}

std::string render_template(
    std::string_view tpl,
    const std::vector<std::pair<std::string_view, std::string_view>>& slots) {
    std::string out(tpl);
    for (const auto& [name, value] : slots) {
        std::string needle = "{" + std::string(name) + "}";
        std::size_t pos = 0;
        while ((pos = out.find(needle, pos)) != std::string::npos) {
            out.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return out;
}

AssetStore::AssetStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

const std::string& AssetStore::prompt(const std::string& name) const {
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;

    auto path = dir_ / "prompts" / (name + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("missing prompt asset: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return cache_.emplace(name, ss.str()).first->second;
}

std::string AssetStore::prompt_hash(const std::string& name) const {
    return content_hash(prompt(name));
}

bool AssetStore::has_prompt(const std::string& name) const {
    return std::filesystem::exists(dir_ / "prompts" / (name + ".txt"));
}

std::map<std::string, std::string> AssetStore::loaded_hashes() const {
    std::map<std::string, std::string> out;
    for (const auto& [name, text] : cache_) out[name] = content_hash(text);
    return out;
}

}  // namespace judgebias::assets
