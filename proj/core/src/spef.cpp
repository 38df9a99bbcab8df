#include "rcwave/spef.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "rcwave/error.hpp"
#include "rcwave/random.hpp"

namespace rcwave::spef {

std::string SpefNet::driver_pin() const {
  for (const auto& c : connections)
    if (c.direction == 'O') return c.pin;
  return {};
}

std::string SpefNet::receiver_pin() const {
  for (const auto& c : connections)
    if (c.direction == 'I') return c.pin;
  return {};
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_real(std::string_view tok, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v))
    throw Error(ErrorCode::MalformedSection, "expected a number, got '" + std::string(tok) + "'",
                line);
  return v;
}

int parse_index(std::string_view tok, int line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw Error(ErrorCode::MalformedSection, "expected an index, got '" + std::string(tok) + "'",
                line);
  return v;
}

double positive(double v, std::string_view what, int line) {
  if (!(v > 0.0))
    throw Error(ErrorCode::NonPositiveValue,
                std::string(what) + " must be positive, got " + std::to_string(v), line);
  return v;
}

enum class Section { Outside, Header, Conn, Cap, Res };

// Line numbers for validation failures found after the block closes.
struct NetLines {
  std::vector<int> res_lines;
};

void check_dangling(const SpefNet& net, const NetLines* lines) {
  std::set<std::string, std::less<>> known;
  for (const auto& c : net.caps) known.insert(c.node);
  for (const auto& c : net.connections) known.insert(c.pin);
  for (std::size_t k = 0; k < net.ress.size(); ++k) {
    const auto& r = net.ress[k];
    for (const auto* node : {&r.node_a, &r.node_b}) {
      if (!known.contains(*node)) {
        const int line = lines ? lines->res_lines[k] : 0;
        throw Error(ErrorCode::DanglingNode,
                    "resistor " + std::to_string(r.index) + " references undeclared node '" +
                        *node + "' in net " + net.name,
                    line);
      }
    }
  }
}

}  // namespace

std::vector<SpefNet> parse_spef(std::string_view text) {
  std::vector<SpefNet> nets;
  SpefNet cur;
  NetLines cur_lines;
  Section section = Section::Outside;
  int line_no = 0;
  int last_line = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    auto tok = split_ws(line);
    if (tok.empty() || tok[0].starts_with("//")) {
      if (eol == text.size()) break;
      continue;
    }
    last_line = line_no;
    const std::string_view head = tok[0];

    if (head == "*D_NET") {
      if (section != Section::Outside)
        throw Error(ErrorCode::MalformedSection, "*D_NET before *END of net " + cur.name, line_no);
      if (tok.size() != 3)
        throw Error(ErrorCode::MalformedSection, "*D_NET expects a name and a total capacitance",
                    line_no);
      cur = SpefNet{};
      cur_lines = NetLines{};
      cur.name = std::string(tok[1]);
      cur.total_cap_ff = positive(parse_real(tok[2], line_no), "total capacitance", line_no);
      section = Section::Header;
    } else if (section == Section::Outside) {
      throw Error(ErrorCode::MalformedSection,
                  "expected *D_NET, got '" + std::string(head) + "'", line_no);
    } else if (head == "*CONN") {
      if (section != Section::Header)
        throw Error(ErrorCode::MalformedSection, "*CONN out of order", line_no);
      section = Section::Conn;
    } else if (head == "*CAP") {
      if (section != Section::Conn)
        throw Error(ErrorCode::MalformedSection, "*CAP must follow *CONN", line_no);
      section = Section::Cap;
    } else if (head == "*RES") {
      if (section != Section::Cap)
        throw Error(ErrorCode::MalformedSection, "*RES must follow *CAP", line_no);
      section = Section::Res;
    } else if (head == "*END") {
      if (section != Section::Res)
        throw Error(ErrorCode::MalformedSection, "*END before *RES", line_no);
      check_dangling(cur, &cur_lines);
      nets.push_back(std::move(cur));
      section = Section::Outside;
    } else if (section == Section::Conn) {
      if (head != "*I" || tok.size() != 3 || tok[2].size() != 1 ||
          (tok[2][0] != 'I' && tok[2][0] != 'O'))
        throw Error(ErrorCode::MalformedSection, "expected '*I <pin> <I|O>'", line_no);
      cur.connections.push_back({std::string(tok[1]), tok[2][0]});
    } else if (section == Section::Cap) {
      if (tok.size() != 3)
        throw Error(ErrorCode::MalformedSection, "expected '<idx> <node> <cap>'", line_no);
      const int idx = parse_index(tok[0], line_no);
      if (idx != static_cast<int>(cur.caps.size()) + 1)
        throw Error(ErrorCode::MalformedSection,
                    "capacitor index " + std::to_string(idx) + " out of sequence", line_no);
      const double v = positive(parse_real(tok[2], line_no), "capacitance", line_no);
      cur.caps.push_back({idx, std::string(tok[1]), v});
    } else if (section == Section::Res) {
      if (tok.size() != 4)
        throw Error(ErrorCode::MalformedSection, "expected '<idx> <node> <node> <res>'", line_no);
      const int idx = parse_index(tok[0], line_no);
      if (idx != static_cast<int>(cur.ress.size()) + 1)
        throw Error(ErrorCode::MalformedSection,
                    "resistor index " + std::to_string(idx) + " out of sequence", line_no);
      const double v = positive(parse_real(tok[3], line_no), "resistance", line_no);
      cur.ress.push_back({idx, std::string(tok[1]), std::string(tok[2]), v});
      cur_lines.res_lines.push_back(line_no);
    } else {
      throw Error(ErrorCode::MalformedSection, "unexpected '" + std::string(head) + "'", line_no);
    }
    if (eol == text.size()) break;
  }
  if (section != Section::Outside)
    throw Error(ErrorCode::MalformedSection, "missing *END for net " + cur.name, last_line);
  return nets;
}

void validate(const SpefNet& net) {
  if (!(net.total_cap_ff > 0.0))
    throw Error(ErrorCode::NonPositiveValue, "total capacitance must be positive");
  for (std::size_t k = 0; k < net.caps.size(); ++k) {
    if (net.caps[k].index != static_cast<int>(k) + 1)
      throw Error(ErrorCode::MalformedSection, "capacitor indices must be consecutive from 1");
    if (!(net.caps[k].value_ff > 0.0))
      throw Error(ErrorCode::NonPositiveValue, "capacitance must be positive");
  }
  for (std::size_t k = 0; k < net.ress.size(); ++k) {
    if (net.ress[k].index != static_cast<int>(k) + 1)
      throw Error(ErrorCode::MalformedSection, "resistor indices must be consecutive from 1");
    if (!(net.ress[k].value_ohm > 0.0))
      throw Error(ErrorCode::NonPositiveValue, "resistance must be positive");
  }
  for (const auto& c : net.connections)
    if (c.direction != 'I' && c.direction != 'O')
      throw Error(ErrorCode::MalformedSection, "connection direction must be I or O");
  check_dangling(net, nullptr);
}

namespace {
std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}
}  // namespace

double round_sig6(double value) { return std::stod(fmt6(value)); }

std::string emit_spef(const SpefNet& net) {
  std::ostringstream os;
  os << "*D_NET " << net.name << ' ' << fmt6(net.total_cap_ff) << '\n';
  os << "*CONN\n";
  for (const auto& c : net.connections) os << "*I " << c.pin << ' ' << c.direction << '\n';
  os << "*CAP\n";
  for (const auto& c : net.caps) os << c.index << ' ' << c.node << ' ' << fmt6(c.value_ff) << '\n';
  os << "*RES\n";
  for (const auto& r : net.ress)
    os << r.index << ' ' << r.node_a << ' ' << r.node_b << ' ' << fmt6(r.value_ohm) << '\n';
  os << "*END\n";
  return os.str();
}

std::string emit_spef(const std::vector<SpefNet>& nets) {
  std::string out;
  for (std::size_t i = 0; i < nets.size(); ++i) {
    if (i) out += '\n';
    out += emit_spef(nets[i]);
  }
  return out;
}

GeneratorConfig parse_generator_config(std::string_view text) {
  GeneratorConfig cfg;
  std::map<std::string, double*, std::less<>> reals{
      {"cap_min", &cfg.ranges.cap_ff.min},
      {"cap_max", &cfg.ranges.cap_ff.max},
      {"res_min", &cfg.ranges.res_segment_ohm.min},
      {"res_max", &cfg.ranges.res_segment_ohm.max},
      {"end_res_min", &cfg.ranges.res_end_ohm.min},
      {"end_res_max", &cfg.ranges.res_end_ohm.max},
  };
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidArgument, "expected 'key = value'", line_no);
    auto key_tok = split_ws(std::string_view(line).substr(0, eq));
    auto val_tok = split_ws(std::string_view(line).substr(eq + 1));
    if (key_tok.size() != 1 || val_tok.size() != 1)
      throw Error(ErrorCode::InvalidArgument, "expected 'key = value'", line_no);
    const std::string_view key = key_tok[0];
    if (auto it = reals.find(key); it != reals.end()) {
      *it->second = positive(parse_real(val_tok[0], line_no), key, line_no);
    } else if (key == "order") {
      cfg.order = parse_index(val_tok[0], line_no);
      if (cfg.order < 1) throw Error(ErrorCode::InvalidArgument, "order must be >= 1", line_no);
    } else if (key == "seed") {
      const auto v = val_tok[0];
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), cfg.seed);
      if (ec != std::errc{} || ptr != v.data() + v.size())
        throw Error(ErrorCode::InvalidArgument, "seed must be a non-negative integer", line_no);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown key '" + std::string(key) + "'", line_no);
    }
  }
  for (const Range* r : {&cfg.ranges.cap_ff, &cfg.ranges.res_segment_ohm, &cfg.ranges.res_end_ohm})
    if (r->min > r->max) throw Error(ErrorCode::InvalidArgument, "range min exceeds max");
  return cfg;
}

SpefNet generate_spef(int order, std::uint64_t seed, const ValueRanges& ranges,
                      const std::string& name) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "order must be >= 1");
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(order)));
  auto draw = [&](const Range& r) { return round_sig6(rng.uniform(r.min, r.max)); };

  SpefNet net;
  net.name = name;
  const std::string driver = "I1:Y";
  const std::string receiver = "I2:A";
  net.connections = {{driver, 'O'}, {receiver, 'I'}};

  auto node = [&](int k) { return name + ":" + std::to_string(k); };
  double total = 0.0;
  for (int k = 0; k < order; ++k) {
    const double c = draw(ranges.cap_ff);
    total += c;
    net.caps.push_back({k + 1, node(k), c});
  }
  net.total_cap_ff = round_sig6(total);

  int idx = 1;
  net.ress.push_back({idx++, driver, node(0), draw(ranges.res_end_ohm)});
  for (int k = 0; k + 1 < order; ++k)
    net.ress.push_back({idx++, node(k), node(k + 1), draw(ranges.res_segment_ohm)});
  net.ress.push_back({idx++, node(order - 1), receiver, draw(ranges.res_end_ohm)});
  return net;
}

}  // namespace rcwave::spef
