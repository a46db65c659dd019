#include "ier/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ier/error.hpp"

namespace ier {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void fill_aggregates(Metrics& m, bool macro_skip_empty) {
  std::size_t tp = 0, pred = 0, gold = 0, macro_n = 0;
  double mp = 0, mr = 0, mf = 0, wp = 0, wr = 0, wf = 0;
  for (auto& c : m.classes) {
    c.precision = ratio(c.true_positives, c.predicted);
    c.recall = ratio(c.true_positives, c.support);
    c.f1 = f1_score(c.precision, c.recall);
    tp += c.true_positives;
    pred += c.predicted;
    gold += c.support;
    if (!(macro_skip_empty && c.support == 0 && c.predicted == 0)) {
      mp += c.precision;
      mr += c.recall;
      mf += c.f1;
      ++macro_n;
    }
    const double w = static_cast<double>(c.support);
    wp += w * c.precision;
    wr += w * c.recall;
    wf += w * c.f1;
  }
  m.micro.precision = ratio(tp, pred);
  m.micro.recall = ratio(tp, gold);
  m.micro.f1 = f1_score(m.micro.precision, m.micro.recall);
  if (macro_n > 0) {
    m.macro = {mp / static_cast<double>(macro_n), mr / static_cast<double>(macro_n),
               mf / static_cast<double>(macro_n)};
  }
  if (gold > 0) {
    const double g = static_cast<double>(gold);
    m.weighted = {wp / g, wr / g, wf / g};
  }
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s == 0.0 ? 0.0 : 2.0 * precision * recall / s;
}

const ClassScores* Metrics::find(const std::string& label) const {
  for (const auto& c : classes)
    if (c.label == label) return &c;
  return nullptr;
}

std::string Metrics::table() const {
  std::size_t width = 9;
  for (const auto& c : classes) width = std::max(width, c.label.size());
  std::ostringstream out;
  auto row = [&](const std::string& name, double p, double r, double f, const std::string& n) {
    out << name << std::string(width - name.size() + 2, ' ') << fixed(p) << "  " << fixed(r)
        << "  " << fixed(f) << "  " << n << '\n';
  };
  out << "label" << std::string(width - 5 + 2, ' ') << "prec    rec     f1      support\n";
  for (const auto& c : classes)
    row(c.label, c.precision, c.recall, c.f1, std::to_string(c.support));
  out << '\n';
  row("micro", micro.precision, micro.recall, micro.f1, std::to_string(total));
  row("macro", macro.precision, macro.recall, macro.f1, std::to_string(total));
  row("weighted", weighted.precision, weighted.recall, weighted.f1, std::to_string(total));
  if (!confusion.empty()) out << "accuracy " << fixed(accuracy) << '\n';
  return out.str();
}

std::string Metrics::to_json() const {
  nlohmann::ordered_json j;
  auto& cls = j["classes"] = nlohmann::ordered_json::array();
  for (const auto& c : classes) {
    nlohmann::ordered_json e;
    e["label"] = c.label;
    e["precision"] = c.precision;
    e["recall"] = c.recall;
    e["f1"] = c.f1;
    e["support"] = c.support;
    e["predicted"] = c.predicted;
    cls.push_back(std::move(e));
  }
  auto agg = [](const Aggregate& a) {
    nlohmann::ordered_json e;
    e["precision"] = a.precision;
    e["recall"] = a.recall;
    e["f1"] = a.f1;
    return e;
  };
  j["micro"] = agg(micro);
  j["macro"] = agg(macro);
  j["weighted"] = agg(weighted);
  j["total"] = total;
  if (!confusion.empty()) {
    j["accuracy"] = accuracy;
    j["confusion"] = confusion;
  }
  return j.dump(1);
}

std::string Metrics::confusion_csv() const {
  std::ostringstream out;
  out << "gold\\pred";
  for (const auto& c : classes) out << ',' << c.label;
  out << '\n';
  for (std::size_t i = 0; i < confusion.size(); ++i) {
    out << classes[i].label;
    for (auto v : confusion[i]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

Metrics classification_report(const std::vector<std::string>& gold,
                              const std::vector<std::string>& pred,
                              const std::vector<std::string>& labels, bool macro_skip_empty) {
  if (gold.size() != pred.size())
    throw Error(ErrorCode::LengthMismatch, "gold and predicted label lists differ in length");
  std::unordered_map<std::string, std::size_t> index;
  Metrics m;
  for (const auto& l : labels) {
    if (index.emplace(l, m.classes.size()).second) m.classes.push_back({l});
  }
  const std::size_t K = m.classes.size();
  m.confusion.assign(K, std::vector<std::size_t>(K, 0));
  auto lookup = [&](const std::string& l) {
    auto it = index.find(l);
    if (it == index.end())
      throw Error(ErrorCode::InvalidArgument, "label '" + l + "' missing from the label list");
    return it->second;
  };
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto g = lookup(gold[i]);
    const auto p = lookup(pred[i]);
    ++m.confusion[g][p];
    ++m.classes[g].support;
    ++m.classes[p].predicted;
    if (g == p) {
      ++m.classes[g].true_positives;
      ++correct;
    }
  }
  m.total = gold.size();
  m.accuracy = ratio(correct, gold.size());
  fill_aggregates(m, macro_skip_empty);
  return m;
}

Metrics span_f1(const std::vector<std::vector<Span>>& gold,
                const std::vector<std::vector<Span>>& pred) {
  if (gold.size() != pred.size())
    throw Error(ErrorCode::LengthMismatch, "gold and predicted span lists differ in length");
  Metrics m;
  for (auto e : all_entity_labels()) m.classes.push_back({std::string(entity_name(e))});
  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::vector<Span> g = gold[i], p = pred[i];
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    for (const auto& s : g) ++m.classes[static_cast<std::size_t>(s.label)].support;
    for (const auto& s : p) {
      auto& c = m.classes[static_cast<std::size_t>(s.label)];
      ++c.predicted;
      if (std::binary_search(g.begin(), g.end(), s)) ++c.true_positives;
    }
    m.total += g.size();
  }
  fill_aggregates(m, true);
  return m;
}

double krippendorff_alpha(const RatingsMatrix& ratings) {
  // Category order is irrelevant to the result; std::map keeps the
  // summation order deterministic.
  std::map<std::string, double> marginal;  // n_c
  double disagreement = 0.0;               // sum over c != k of o_ck
  double n = 0.0;
  for (const auto& item : ratings) {
    std::map<std::string, double> counts;
    double m_u = 0.0;
    for (const auto& r : item) {
      if (!r) continue;
      counts[*r] += 1.0;
      m_u += 1.0;
    }
    if (m_u < 2.0) continue;
    double same = 0.0;
    for (const auto& [c, k] : counts) {
      same += k * (k - 1.0);
      marginal[c] += k;
    }
    const double pairs = m_u * (m_u - 1.0);
    disagreement += (pairs - same) / (m_u - 1.0);
    n += m_u;
  }
  if (n < 2.0) throw Error(ErrorCode::Undefined, "alpha needs at least two pairable values");
  double expected = n * n;
  for (const auto& [c, k] : marginal) expected -= k * k;  // sum over c != k of n_c n_k
  if (expected <= 0.0)
    throw Error(ErrorCode::Undefined, "alpha is undefined when all pairable values agree");
  return 1.0 - (n - 1.0) * disagreement / expected;
}

RatingsMatrix parse_ratings_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
      }
      row.clear();
      cell.clear();
      any = false;
    } else {
      cell += ch;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::Malformed, "unterminated quote in ratings CSV");
  if (any || !cell.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::Malformed, "ratings CSV has no header row");

  const std::size_t raters = rows.front().size();
  RatingsMatrix out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() > raters)
      throw Error(ErrorCode::Malformed, "row " + std::to_string(r + 1) + " has more cells than raters");
    std::vector<std::optional<std::string>> item(raters);
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      auto v = rows[r][c];
      const auto b = v.find_first_not_of(" \t");
      const auto e = v.find_last_not_of(" \t");
      v = b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
      if (!v.empty()) item[c] = std::move(v);
    }
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace ier
