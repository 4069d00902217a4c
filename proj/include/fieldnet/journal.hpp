#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fieldnet/core.hpp"

namespace fieldnet {

// Append-only record log, one line per record. File-backed when given a path,
// otherwise held in memory; either way the log outlives the component that
// writes it, so a restarted component can replay it.
class Journal {
 public:
  Journal() = default;

  explicit Journal(std::filesystem::path path) : path_(std::move(path)) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    drop_torn_tail();
    out_.open(*path_, std::ios::app);
    if (!out_) throw Error("cannot open journal " + path_->string());
  }

  static std::shared_ptr<Journal> in_memory() { return std::make_shared<Journal>(); }

  static std::shared_ptr<Journal> at(const std::optional<std::filesystem::path>& p) {
    return p ? std::make_shared<Journal>(*p) : in_memory();
  }

  void append(const std::string& line) {
    ++count_;
    if (path_) {
      out_ << line << '\n';
      out_.flush();
    } else {
      lines_.push_back(line);
    }
  }

  std::vector<std::string> read_all() const {
    if (!path_) return lines_;
    std::vector<std::string> out;
    std::ifstream in(*path_, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    // A record without its newline was torn by a crash mid-write; drop it.
    std::size_t i = 0;
    while (i < text.size()) {
      const std::size_t j = text.find('\n', i);
      if (j == std::string::npos) break;
      if (j > i) out.push_back(text.substr(i, j - i));
      i = j + 1;
    }
    return out;
  }

  const std::optional<std::filesystem::path>& path() const { return path_; }
  std::size_t appended() const { return count_; }

 private:
  // Cuts a trailing partial record so new appends start on a fresh line.
  void drop_torn_tail() {
    if (!std::filesystem::exists(*path_)) return;
    const auto size = std::filesystem::file_size(*path_);
    if (size == 0) return;
    std::ifstream in(*path_, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    if (text.back() == '\n') return;
    const auto nl = text.rfind('\n');
    std::filesystem::resize_file(*path_, nl == std::string::npos ? 0 : nl + 1);
  }

  std::optional<std::filesystem::path> path_;
  std::ofstream out_;
  std::vector<std::string> lines_;
  std::size_t count_ = 0;
};

}  // namespace fieldnet
