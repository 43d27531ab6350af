#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "adafl/dataset.hpp"
#include "adafl/error.hpp"
#include "adafl/random.hpp"

namespace adafl {

/// One private dataset per client.
struct ClientPartition {
  std::vector<Dataset> clients;

  std::size_t num_clients() const { return clients.size(); }
  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out;
    out.reserve(clients.size());
    for (const auto& c : clients) out.push_back(c.size());
    return out;
  }
};

/// Gaussian blobs: class c is centred on a seeded N(0, I) mean and samples get
/// isotropic noise of scale `cluster_spread`. Sample i has label i mod C, so
/// class counts differ by at most one.
inline Dataset generate_synthetic(std::size_t n_samples, std::size_t n_features, int n_classes,
                                  double cluster_spread, std::uint64_t seed) {
  if (n_classes < 1) throw InvalidArgument("generate_synthetic: n_classes must be >= 1");
  if (n_samples < static_cast<std::size_t>(n_classes)) {
    throw InvalidArgument("generate_synthetic: n_samples must be >= n_classes");
  }
  if (n_features < 1) throw InvalidArgument("generate_synthetic: n_features must be >= 1");
  if (!(cluster_spread > 0.0)) throw InvalidArgument("generate_synthetic: cluster_spread must be > 0");

  Rng rng = derive_rng(seed, {stream::kData});
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(n_features);
  Eigen::MatrixXd means(n_classes, d);
  for (Eigen::Index c = 0; c < n_classes; ++c)
    for (Eigen::Index j = 0; j < d; ++j) means(c, j) = normal(rng);

  Dataset out;
  out.num_classes = n_classes;
  out.features.resize(static_cast<Eigen::Index>(n_samples), d);
  out.labels.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(n_classes));
    out.labels[i] = label;
    for (Eigen::Index j = 0; j < d; ++j) {
      out.features(static_cast<Eigen::Index>(i), j) = means(label, j) + cluster_spread * normal(rng);
    }
  }
  return out;
}

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

/// Stratified split: `n_test / C` samples of every class go to the test set.
/// Relative order inside each part follows the source.
inline TrainTestSplit split_train_test(const Dataset& data, std::size_t n_test, std::uint64_t seed) {
  const auto classes = static_cast<std::size_t>(data.num_classes);
  if (n_test % classes != 0) throw InvalidArgument("split_train_test: n_test must be a multiple of the class count");
  const std::size_t per_class = n_test / classes;

  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < data.size(); ++i) by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

  Rng rng = derive_rng(seed, {stream::kPartition, 0});
  std::vector<bool> is_test(data.size(), false);
  for (auto& members : by_class) {
    if (members.size() <= per_class) throw InvalidArgument("split_train_test: a class has too few samples");
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t k = 0; k < per_class; ++k) is_test[members[k]] = true;
  }
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  for (std::size_t i = 0; i < data.size(); ++i) (is_test[i] ? test_idx : train_idx).push_back(i);
  return {data.subset(train_idx), data.subset(test_idx)};
}

/// Label-sorted shard split: sort by label, cut into M·shards_per_client equal
/// contiguous shards, deal them out by a seeded permutation. Each client keeps
/// its shards in ascending shard order.
inline ClientPartition partition_noniid_shards(const Dataset& data, std::size_t num_clients,
                                               std::size_t shards_per_client, std::uint64_t seed) {
  if (num_clients == 0 || shards_per_client == 0) {
    throw InvalidArgument("partition_noniid_shards: client and shard counts must be positive");
  }
  const std::size_t num_shards = num_clients * shards_per_client;
  if (data.size() % num_shards != 0) {
    throw InvalidArgument("partition_noniid_shards: " + std::to_string(data.size()) + " samples cannot be split into " +
                          std::to_string(num_shards) + " equal shards (" + std::to_string(num_clients) +
                          " clients x " + std::to_string(shards_per_client) +
                          " shards); sample count must be a multiple of " + std::to_string(num_shards));
  }
  const std::size_t shard_size = data.size() / num_shards;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data.labels[a] < data.labels[b]; });

  std::vector<std::size_t> shard_ids(num_shards);
  std::iota(shard_ids.begin(), shard_ids.end(), std::size_t{0});
  Rng rng = derive_rng(seed, {stream::kPartition, 1});
  std::shuffle(shard_ids.begin(), shard_ids.end(), rng);

  ClientPartition out;
  out.clients.reserve(num_clients);
  for (std::size_t k = 0; k < num_clients; ++k) {
    std::vector<std::size_t> mine(shard_ids.begin() + static_cast<std::ptrdiff_t>(k * shards_per_client),
                                  shard_ids.begin() + static_cast<std::ptrdiff_t>((k + 1) * shards_per_client));
    std::sort(mine.begin(), mine.end());
    std::vector<std::size_t> rows;
    rows.reserve(shard_size * shards_per_client);
    for (std::size_t s : mine) {
      for (std::size_t i = 0; i < shard_size; ++i) rows.push_back(order[s * shard_size + i]);
    }
    out.clients.push_back(data.subset(rows));
  }
  return out;
}

/// Seeded shuffle followed by an equal contiguous split.
inline ClientPartition partition_iid(const Dataset& data, std::size_t num_clients, std::uint64_t seed) {
  if (num_clients == 0) throw InvalidArgument("partition_iid: client count must be positive");
  if (data.size() % num_clients != 0) {
    throw InvalidArgument("partition_iid: " + std::to_string(data.size()) + " samples do not divide evenly among " +
                          std::to_string(num_clients) + " clients");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = derive_rng(seed, {stream::kPartition, 2});
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t each = data.size() / num_clients;
  ClientPartition out;
  out.clients.reserve(num_clients);
  for (std::size_t k = 0; k < num_clients; ++k) {
    out.clients.push_back(data.subset(std::span<const std::size_t>(order).subspan(k * each, each)));
  }
  return out;
}

// IDX container (MNIST): big-endian magic, big-endian u32 dimensions, raw u8 payload.

class IdxError : public Error {
 public:
  using Error::Error;
};
class IdxMagicError : public IdxError {
 public:
  using IdxError::IdxError;
};
class IdxTruncatedError : public IdxError {
 public:
  using IdxError::IdxError;
};
class IdxCountMismatchError : public IdxError {
 public:
  using IdxError::IdxError;
};

inline constexpr std::uint32_t kIdxImageMagic = 2051;
inline constexpr std::uint32_t kIdxLabelMagic = 2049;

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError("cannot open IDX file '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::string& path) {
  if (bytes.size() < offset + 4) throw IdxTruncatedError("IDX file '" + path + "' is truncated in its header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace detail

/// Loads an IDX image/label pair. Pixels are scaled by 1/255; the class count
/// is max(label) + 1 (at least 10, the MNIST digit count).
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto images = detail::read_file(images_path);
  const auto labels = detail::read_file(labels_path);

  const std::uint32_t image_magic = detail::read_be32(images, 0, images_path);
  if (image_magic != kIdxImageMagic) {
    throw IdxMagicError("'" + images_path + "': expected image magic 2051, found " + std::to_string(image_magic));
  }
  const std::uint32_t label_magic = detail::read_be32(labels, 0, labels_path);
  if (label_magic != kIdxLabelMagic) {
    throw IdxMagicError("'" + labels_path + "': expected label magic 2049, found " + std::to_string(label_magic));
  }

  const std::size_t count = detail::read_be32(images, 4, images_path);
  const std::size_t rows = detail::read_be32(images, 8, images_path);
  const std::size_t cols = detail::read_be32(images, 12, images_path);
  const std::size_t label_count = detail::read_be32(labels, 4, labels_path);
  if (count != label_count) {
    throw IdxCountMismatchError("IDX image count " + std::to_string(count) + " does not match label count " +
                                std::to_string(label_count));
  }
  const std::size_t pixels = rows * cols;
  if (images.size() < 16 + count * pixels) {
    throw IdxTruncatedError("'" + images_path + "' holds fewer pixels than its header declares");
  }
  if (labels.size() < 8 + count) {
    throw IdxTruncatedError("'" + labels_path + "' holds fewer labels than its header declares");
  }

  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  out.labels.resize(count);
  int max_label = 0;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
          static_cast<double>(images[16 + i * pixels + p]) / 255.0;
    }
    out.labels[i] = labels[8 + i];
    max_label = std::max(max_label, out.labels[i]);
  }
  out.num_classes = std::max(10, max_label + 1);
  return out;
}

}  // namespace adafl
