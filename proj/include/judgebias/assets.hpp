// Prompt templates and other editable text assets, versioned by content hash.
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace judgebias::assets {

// 16-hex-digit FNV-1a content hash used to version templates and configs.
std::string content_hash(std::string_view content);

// Replaces every "{name}" slot with its value. Unknown slots are left
// untouched so template problems stay visible.
std::string render_template(
    std::string_view tpl,
    const std::vector<std::pair<std::string_view, std::string_view>>& slots);

class AssetStore {
public:
    explicit AssetStore(std::filesystem::path dir);

    // Loads and caches "<dir>/prompts/<name>.txt".
    const std::string& prompt(const std::string& name) const;
    std::string prompt_hash(const std::string& name) const;

    bool has_prompt(const std::string& name) const;
    const std::filesystem::path& dir() const { return dir_; }

    // name -> hash for every prompt loaded so far, for run manifests.
    std::map<std::string, std::string> loaded_hashes() const;

private:
    std::filesystem::path dir_;
    mutable std::map<std::string, std::string> cache_;
};

}  // namespace judgebias::assets
