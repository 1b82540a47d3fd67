#include "iwz/model_io.hpp"

#include "iwz/error.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <vector>

namespace iwz {

using nlohmann::json;

namespace {

// Input iterator that tracks the line of the last non-blank character
// consumed by the parser, so parse callbacks can attribute values to lines.
class LineTrackingIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  LineTrackingIterator(const char* p, int* line, int* token_line)
      : p_(p), line_(line), token_line_(token_line) {}

  reference operator*() const { return *p_; }
  LineTrackingIterator& operator++() {
    if (*p_ == '\n') {
      ++*line_;
    } else if (!std::isspace(static_cast<unsigned char>(*p_))) {
      *token_line_ = *line_;
    }
    ++p_;
    return *this;
  }
  LineTrackingIterator operator++(int) {
    auto copy = *this;
    ++*this;
    return copy;
  }
  bool operator==(const LineTrackingIterator& o) const { return p_ == o.p_; }
  bool operator!=(const LineTrackingIterator& o) const { return p_ != o.p_; }

 private:
  const char* p_;
  int* line_;
  int* token_line_;
};

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

// Parsed document plus the source line of every value, keyed by JSON pointer.
class LocatedDocument {
 public:
  explicit LocatedDocument(std::string_view text) {
    int line = 1;
    int token_line = 1;
    struct Frame {
      bool array = false;
      std::size_t index = 0;
      std::string key;
    };
    std::vector<Frame> stack;
    auto child_pointer = [&] {
      std::string ptr;
      for (const Frame& f : stack) {
        ptr += '/';
        ptr += f.array ? std::to_string(f.index) : escape_token(f.key);
      }
      return ptr;
    };
    auto advance = [&] {
      if (!stack.empty() && stack.back().array) ++stack.back().index;
    };
    auto callback = [&](int, json::parse_event_t event, json& parsed) {
      switch (event) {
        case json::parse_event_t::object_start:
        case json::parse_event_t::array_start:
          lines_[child_pointer()] = token_line;
          stack.push_back({event == json::parse_event_t::array_start, 0, {}});
          break;
        case json::parse_event_t::key:
          stack.back().key = parsed.get<std::string>();
          break;
        case json::parse_event_t::value:
          lines_[child_pointer()] = token_line;
          advance();
          break;
        case json::parse_event_t::object_end:
        case json::parse_event_t::array_end:
          stack.pop_back();
          advance();
          break;
      }
      return true;
    };
    try {
      doc_ = json::parse(LineTrackingIterator(text.data(), &line, &token_line),
                         LineTrackingIterator(text.data() + text.size(), &line, &token_line),
                         callback);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::Schema, e.what());
    }
  }

  const json& doc() const noexcept { return doc_; }

  [[noreturn]] void fail(ErrorCode code, const std::string& pointer,
                         const std::string& message) const {
    std::ostringstream msg;
    auto it = lines_.find(pointer);
    if (it != lines_.end()) msg << "line " << it->second << ": ";
    msg << (pointer.empty() ? "/" : pointer) << ": " << message;
    throw Error(code, msg.str());
  }

  const json& member(const std::string& key) const {
    if (!doc_.is_object()) fail(ErrorCode::Schema, "", "expected an object");
    auto it = doc_.find(key);
    if (it == doc_.end()) fail(ErrorCode::Schema, "", "missing key \"" + key + "\"");
    return *it;
  }

  Alphabet alphabet(const std::string& key) const {
    const json& arr = member(key);
    const std::string base = "/" + key;
    if (!arr.is_array() || arr.empty()) fail(ErrorCode::Schema, base, "expected a nonempty array");
    Alphabet out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const json& v = arr[i];
      if (v.is_number()) {
        out.push_back(Symbol::numeric(v.get<double>()));
      } else if (v.is_string()) {
        out.push_back(Symbol::named(v.get<std::string>()));
      } else {
        fail(ErrorCode::Schema, base + "/" + std::to_string(i), "expected a number or string");
      }
    }
    return out;
  }

  double number(const json& v, const std::string& pointer) const {
    if (!v.is_number()) fail(ErrorCode::Schema, pointer, "expected a number");
    return v.get<double>();
  }

  const json& array_of(const json& v, const std::string& pointer, std::size_t size) const {
    if (!v.is_array()) fail(ErrorCode::Schema, pointer, "expected an array");
    if (v.size() != size) {
      fail(ErrorCode::DimensionMismatch, pointer,
           "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
    }
    return v;
  }

  Eigen::MatrixXd table(const std::string& key, std::size_t rows, std::size_t cols) const {
    const std::string base = "/" + key;
    const json& outer = array_of(member(key), base, rows);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
      const std::string row_ptr = base + "/" + std::to_string(i);
      const json& row = array_of(outer[i], row_ptr, cols);
      for (std::size_t j = 0; j < cols; ++j) {
        const std::string ptr = row_ptr + "/" + std::to_string(j);
        const double v = number(row[j], ptr);
        if (!(v >= 0.0) || !std::isfinite(v)) {
          fail(ErrorCode::InvalidArgument, ptr, "distortion must be finite and nonnegative");
        }
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      }
    }
    return out;
  }

 private:
  json doc_;
  std::map<std::string, int> lines_;
};

json alphabet_to_json(const Alphabet& alpha) {
  json arr = json::array();
  for (const Symbol& s : alpha) {
    if (s.value) {
      arr.push_back(*s.value);
    } else {
      arr.push_back(s.label);
    }
  }
  return arr;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

JointSourceModel parse_model_json(std::string_view text) {
  const LocatedDocument doc(text);
  Alphabet s = doc.alphabet("s_alphabet");
  Alphabet x = doc.alphabet("x_alphabet");
  Alphabet y = doc.alphabet("y_alphabet");
  Alphabet sh = doc.alphabet("s_hat_alphabet");
  Alphabet xh = doc.alphabet("x_hat_alphabet");

  std::vector<double> p;
  p.reserve(s.size() * x.size() * y.size());
  const json& cube = doc.array_of(doc.member("p_sxy"), "/p_sxy", s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::string pi = "/p_sxy/" + std::to_string(i);
    const json& plane = doc.array_of(cube[i], pi, x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      const std::string pj = pi + "/" + std::to_string(j);
      const json& row = doc.array_of(plane[j], pj, y.size());
      for (std::size_t k = 0; k < y.size(); ++k) {
        const std::string pk = pj + "/" + std::to_string(k);
        const double v = doc.number(row[k], pk);
        if (v < 0.0) {
          doc.fail(ErrorCode::NegativeProbability, pk, "probability " + row[k].dump() + " < 0");
        }
        p.push_back(v);
      }
    }
  }
  Eigen::MatrixXd d_x = doc.table("d_x", x.size(), xh.size());
  Eigen::MatrixXd d_s = doc.table("d_s", s.size(), sh.size());
  try {
    return build_from_table(std::move(s), std::move(x), std::move(y), std::move(sh),
                            std::move(xh), std::move(p), std::move(d_x), std::move(d_s));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SumNotOne) doc.fail(e.code(), "/p_sxy", e.what());
    throw;
  }
}

JointSourceModel load_model(const std::filesystem::path& path) {
  return parse_model_json(read_text_file(path));
}

json model_to_json(const JointSourceModel& model) {
  json cube = json::array();
  for (std::size_t s = 0; s < model.s_size(); ++s) {
    json plane = json::array();
    for (std::size_t x = 0; x < model.x_size(); ++x) {
      json row = json::array();
      for (std::size_t y = 0; y < model.y_size(); ++y) row.push_back(model.p(s, x, y));
      plane.push_back(std::move(row));
    }
    cube.push_back(std::move(plane));
  }
  json doc;
  doc["s_alphabet"] = alphabet_to_json(model.s_alphabet());
  doc["x_alphabet"] = alphabet_to_json(model.x_alphabet());
  doc["y_alphabet"] = alphabet_to_json(model.y_alphabet());
  doc["s_hat_alphabet"] = alphabet_to_json(model.s_hat_alphabet());
  doc["x_hat_alphabet"] = alphabet_to_json(model.x_hat_alphabet());
  doc["p_sxy"] = std::move(cube);
  doc["d_x"] = matrix_to_json(model.d_x());
  doc["d_s"] = matrix_to_json(model.d_s());
  return doc;
}

json solution_to_json(const BASolution& solution) {
  json recon_s = json::array();
  json recon_x = json::array();
  for (std::size_t u = 0; u < solution.recon.u_size; ++u) {
    json srow = json::array();
    json xrow = json::array();
    for (std::size_t y = 0; y < solution.recon.y_size; ++y) {
      srow.push_back(solution.recon.s_hat_at(u, y));
      xrow.push_back(solution.recon.x_hat_at(u, y));
    }
    recon_s.push_back(std::move(srow));
    recon_x.push_back(std::move(xrow));
  }
  json doc;
  doc["lambda"] = solution.lambda;
  doc["mu"] = solution.mu;
  doc["rate"] = solution.rate;
  doc["dist_x"] = solution.dist_x;
  doc["dist_s"] = solution.dist_s;
  doc["iterations"] = solution.iterations;
  doc["converged"] = solution.converged;
  doc["u_size"] = solution.channel.u_size();
  doc["channel"] = matrix_to_json(solution.channel.p_u_given_x);
  doc["recon"] = {{"s_hat", std::move(recon_s)}, {"x_hat", std::move(recon_x)}};
  doc["lagrangian_trace"] = solution.lagrangian_trace;
  return doc;
}

BASolution parse_solution_json(std::string_view text, const JointSourceModel& model) {
  const LocatedDocument doc(text);
  BASolution sol;
  sol.lambda = doc.number(doc.member("lambda"), "/lambda");
  sol.mu = doc.number(doc.member("mu"), "/mu");
  const json& u_json = doc.member("u_size");
  if (!u_json.is_number_unsigned() || u_json.get<std::size_t>() == 0) {
    doc.fail(ErrorCode::Schema, "/u_size", "expected a positive integer");
  }
  const std::size_t nu = u_json.get<std::size_t>();

  const json& ch = doc.array_of(doc.member("channel"), "/channel", model.x_size());
  sol.channel.p_u_given_x.resize(static_cast<Eigen::Index>(model.x_size()),
                                 static_cast<Eigen::Index>(nu));
  for (std::size_t x = 0; x < model.x_size(); ++x) {
    const std::string px = "/channel/" + std::to_string(x);
    const json& row = doc.array_of(ch[x], px, nu);
    for (std::size_t u = 0; u < nu; ++u) {
      sol.channel.p_u_given_x(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(u)) =
          doc.number(row[u], px + "/" + std::to_string(u));
    }
  }
  validate_channel(model, sol.channel);

  const json& recon = doc.member("recon");
  if (!recon.is_object() || !recon.contains("s_hat") || !recon.contains("x_hat")) {
    doc.fail(ErrorCode::Schema, "/recon", "expected s_hat and x_hat tables");
  }
  sol.recon = ReconstructionMap(nu, model.y_size());
  auto read_map = [&](const char* name, std::vector<std::size_t>& dst, std::size_t limit) {
    const std::string base = std::string("/recon/") + name;
    const json& outer = doc.array_of(recon[name], base, nu);
    for (std::size_t u = 0; u < nu; ++u) {
      const std::string pu = base + "/" + std::to_string(u);
      const json& row = doc.array_of(outer[u], pu, model.y_size());
      for (std::size_t y = 0; y < model.y_size(); ++y) {
        const json& v = row[y];
        if (!v.is_number_unsigned() || v.get<std::size_t>() >= limit) {
          doc.fail(ErrorCode::Schema, pu + "/" + std::to_string(y),
                   "expected a symbol index below " + std::to_string(limit));
        }
        dst[u * model.y_size() + y] = v.get<std::size_t>();
      }
    }
  };
  read_map("s_hat", sol.recon.s_hat, model.s_hat_size());
  read_map("x_hat", sol.recon.x_hat, model.x_hat_size());

  const Distortions d = evaluate_distortions(model, sol.channel, sol.recon);
  sol.rate = evaluate_rate(model, sol.channel);
  sol.dist_x = d.dist_x;
  sol.dist_s = d.dist_s;
  if (doc.doc().contains("iterations") && doc.doc()["iterations"].is_number_integer()) {
    sol.iterations = doc.doc()["iterations"].get<int>();
  }
  if (doc.doc().contains("converged") && doc.doc()["converged"].is_boolean()) {
    sol.converged = doc.doc()["converged"].get<bool>();
  }
  return sol;
}

BASolution load_solution(const std::filesystem::path& path, const JointSourceModel& model) {
  return parse_solution_json(read_text_file(path), model);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Schema, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Schema, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace iwz
