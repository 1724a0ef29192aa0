#pragma once
#include <string>
#include <vector>

#include "certitight/autotemplate.hpp"
#include "certitight/autotight.hpp"
#include "certitight/conic.hpp"
#include "certitight/liftprob.hpp"

namespace ct {

// All emitted files must be byte-identical across runs with the same flags,
// so numbers are printed with a fixed %.17g and field order is hard-coded.
std::string format_double(double v);

std::string template_library_json(const TemplateLibrary& lib);
void write_template_library(const TemplateLibrary& lib, const std::string& path);
TemplateLibrary read_template_library(const std::string& path);

std::string setup_json(const ProblemSetup& s);
void write_setup(const ProblemSetup& s, const std::string& path);
ProblemSetup read_setup(const std::string& path);

// Candidate file: {"theta": [...]} (raw estimate, not lifted).
Eigen::VectorXd read_candidate(const std::string& path);

std::string report_json(const TightnessReport& r);
std::string certificate_json(const Certificate& c);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// RunReport CSV (one row per evaluated configuration).
struct RunRow {
  std::string family;
  uint64_t seed = 0;
  int n_vars = 0;
  int n_constraints_known = 0;
  int n_constraints_applied = 0;
  double rdg = 0, er = 0, p_star = 0, d_star = 0, q_hat = 0;
  bool cost_tight = false, rank_tight = false;
  double t_learn_s = 0, t_apply_s = 0, t_solve_s = 0;
  std::string status;
};
std::string run_report_header();
std::string run_report_row(const RunRow& row);

}  // namespace ct
