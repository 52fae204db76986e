#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "gnncert/error.hpp"
#include "gnncert/mip.hpp"

namespace gnncert {

std::string format_number(double x) {
  if (x == 0.0) return "0";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw Error(ErrorCode::IoError, "cannot format number");
  return std::string(buf, end);
}

namespace {

constexpr int kTermsPerLine = 8;

void write_terms(std::ostream& out, const MIPModel& mip, const std::vector<Term>& terms) {
  int on_line = 0;
  for (const auto& t : terms) {
    if (on_line == kTermsPerLine) {
      out << "\n   ";
      on_line = 0;
    }
    out << (t.coef < 0 ? " - " : " + ") << format_number(std::abs(t.coef)) << ' ' << mip.variables()[t.var].name;
    ++on_line;
  }
}

const char* sense_text(Sense s) {
  switch (s) {
    case Sense::LessEqual: return "<=";
    case Sense::GreaterEqual: return ">=";
    case Sense::Equal: return "=";
  }
  return "=";
}

}  // namespace

void write_lp(const MIPModel& mip, std::ostream& out) {
  out << "\\ verification MIP: minimize f_true - f_attack\n";
  out << "Minimize\n obj:";
  if (mip.objective.empty()) out << " 0";
  write_terms(out, mip, mip.objective);
  out << "\nSubject To\n";

  std::vector<const LinearConstraint*> rows;
  for (const auto& c : mip.constraints()) rows.push_back(&c);
  std::sort(rows.begin(), rows.end(), [](const LinearConstraint* a, const LinearConstraint* b) {
    return a->tag != b->tag ? a->tag < b->tag : a->index < b->index;
  });
  for (const auto* row : rows) {
    out << ' ' << row->name() << ':';
    if (row->terms.empty()) out << " 0";
    write_terms(out, mip, row->terms);
    out << ' ' << sense_text(row->sense) << ' ' << format_number(row->rhs) << '\n';
  }

  std::vector<const Variable*> vars;
  for (const auto& v : mip.variables()) vars.push_back(&v);
  std::sort(vars.begin(), vars.end(), [](const Variable* a, const Variable* b) { return a->name < b->name; });

  out << "Bounds\n";
  for (const auto* v : vars) {
    if (v->binary) continue;
    if (v->lo == v->hi) {
      out << ' ' << v->name << " = " << format_number(v->lo) << '\n';
    } else {
      out << ' ' << format_number(v->lo) << " <= " << v->name << " <= " << format_number(v->hi) << '\n';
    }
  }
  out << "Binaries\n";
  for (const auto* v : vars)
    if (v->binary) out << ' ' << v->name << '\n';
  out << "End\n";
}

void write_lp(const MIPModel& mip, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw Error(ErrorCode::IoError, "cannot open " + path);
  write_lp(mip, file);
  if (!file) throw Error(ErrorCode::IoError, "write failed for " + path);
}

std::string to_lp_string(const MIPModel& mip) {
  std::ostringstream out;
  write_lp(mip, out);
  return out.str();
}

}  // namespace gnncert
