#ifndef PLSA_CONTAINER_H_
#define PLSA_CONTAINER_H_

#include <iosfwd>
#include <optional>
#include <string>

#include "plsa/aspect_model.h"
#include "plsa/lsa.h"

namespace plsa {

// Text container shared by aspect models and SVD decompositions:
//
//   plsa-container 1
//   object aspect-model
//   factors K
//   docs N
//   terms M
//   beta B            (optional: inverse temperature the model was trained at)
//   prior             followed by K values, one per line
//   doc_given_z       followed by N lines of K values
//   word_given_z      followed by M lines of K values
//   end
//
// Decompositions use "object svd", "rank K", "rows N", "cols M" and the
// blocks "sigma", "u", "v". Values are written in shortest round-trip form,
// so reading back reproduces every double exactly.
inline constexpr int kContainerVersion = 1;

struct StoredModel {
  AspectModel model;
  std::optional<double> beta;
};

void write_model(std::ostream& out, const AspectModel& model,
                 std::optional<double> beta = std::nullopt);
StoredModel read_model(std::istream& in, const std::string& source = "<stream>");
void save_model(const std::string& path, const AspectModel& model,
                std::optional<double> beta = std::nullopt);
StoredModel load_model(const std::string& path);

void write_svd(std::ostream& out, const SvdDecomposition& decomp);
SvdDecomposition read_svd(std::istream& in, const std::string& source = "<stream>");
void save_svd(const std::string& path, const SvdDecomposition& decomp);
SvdDecomposition load_svd(const std::string& path);

}  // namespace plsa

#endif  // PLSA_CONTAINER_H_
