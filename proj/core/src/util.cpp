#include "ctstack/util.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "ctstack/errors.hpp"

namespace fs = std::filesystem;

namespace ctstack {

void parallel_for(int count, int workers, const std::function<void(int)>& body) {
  if (count <= 0) return;
  const int n_threads = std::min(std::max(workers, 1), count);
  if (n_threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }

  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(count);  // stop handing out work
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) {
    throw FormatError("failed reading file: " + path.string());
  }
  return std::move(buf).str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  const fs::path parent = path.parent_path();
  if (!parent.empty()) fs::create_directories(parent);

  static std::atomic<std::uint64_t> counter{0};
  const fs::path tmp =
      path.string() + ".tmp-" + to_hex(splitmix64(counter.fetch_add(1) ^
                                                  fnv1a64(path.string())));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw FormatError("cannot open file for writing: " + tmp.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) {
      throw FormatError("failed writing file: " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::uint64_t digest_file(const fs::path& path) {
  return fnv1a64(read_file(path));
}

std::uint64_t digest_tree(const fs::path& path) {
  if (fs::is_regular_file(path)) return digest_file(path);
  if (!fs::is_directory(path)) {
    throw FormatError("cannot digest: not a file or directory: " +
                      path.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::vector<std::pair<std::string, fs::path>> named;
  named.reserve(files.size());
  for (const auto& f : files) {
    named.emplace_back(fs::relative(f, path).generic_string(), f);
  }
  std::sort(named.begin(), named.end());

  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [rel, full] : named) {
    h = splitmix64(h ^ fnv1a64(rel));
    h = splitmix64(h ^ digest_file(full));
  }
  return h;
}

std::string to_hex(std::uint64_t value) {
  static const char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::string format_comparison_table(
    const std::vector<std::string>& header,
    const std::vector<std::vector<std::string>>& rows) {
  const std::size_t cols = header.size();
  std::vector<std::size_t> widths(cols);
  for (std::size_t c = 0; c < cols; ++c) widths[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < cols && c < row.size(); ++c) {
      widths[c] = std::max(widths[c], row[c].size());
    }
  }

  auto emit_row = [&](std::ostringstream& out,
                      const std::vector<std::string>& row) {
    out << '|';
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string& cell = c < row.size() ? row[c] : std::string();
      out << ' ' << cell << std::string(widths[c] - cell.size(), ' ') << " |";
    }
    out << '\n';
  };

  std::ostringstream out;
  emit_row(out, header);
  out << '|';
  for (std::size_t c = 0; c < cols; ++c) {
    out << ' ' << std::string(widths[c], '-') << " |";
  }
  out << '\n';
  for (const auto& row : rows) emit_row(out, row);
  return std::move(out).str();
}

}  // namespace ctstack
