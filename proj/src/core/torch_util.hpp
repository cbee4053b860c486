#pragma once

// Internal helpers shared by the libtorch-backed modules. Not installed.

#include <torch/torch.h>

#include <string>
#include <vector>

#include "core/errors.hpp"
#include "core/image.hpp"
#include "core/tensor_archive.hpp"

namespace gemix::detail {

/// Stacks HWC images into an N x C x H x W float tensor.
inline torch::Tensor images_to_tensor(const std::vector<const ImageTensor*>& images) {
  require(!images.empty(), "no images to convert");
  const auto& first = *images.front();
  const auto n = static_cast<std::int64_t>(images.size());
  auto out = torch::empty({n, first.channels, first.height, first.width}, torch::kFloat32);
  float* dst = out.data_ptr<float>();
  const std::size_t plane = static_cast<std::size_t>(first.height) * first.width;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& img = *images[static_cast<std::size_t>(i)];
    require(img.same_shape(first), "images in a batch must share one shape");
    float* base = dst + static_cast<std::size_t>(i) * plane * first.channels;
    for (std::size_t p = 0; p < plane; ++p)
      for (int c = 0; c < first.channels; ++c)
        base[c * plane + p] = img.values[p * first.channels + c];
  }
  return out;
}

/// Inverse of images_to_tensor for a single C x H x W slice.
inline ImageTensor tensor_to_image(const torch::Tensor& chw) {
  auto t = chw.contiguous().to(torch::kFloat32);
  const int c = static_cast<int>(t.size(0));
  const int h = static_cast<int>(t.size(1));
  const int w = static_cast<int>(t.size(2));
  ImageTensor img(h, w, c);
  const float* src = t.data_ptr<float>();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t p = 0; p < plane; ++p)
    for (int ch = 0; ch < c; ++ch) img.values[p * c + ch] = src[ch * plane + p];
  return img;
}

inline torch::Tensor labels_to_tensor(const std::vector<const SoftLabel*>& labels) {
  const auto n = static_cast<std::int64_t>(labels.size());
  const auto k = static_cast<std::int64_t>(labels.front()->classes());
  auto out = torch::empty({n, k}, torch::kFloat32);
  float* dst = out.data_ptr<float>();
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& l = *labels[static_cast<std::size_t>(i)];
    require(static_cast<std::int64_t>(l.classes()) == k, "label lengths differ in batch");
    for (std::int64_t j = 0; j < k; ++j)
      dst[i * k + j] = static_cast<float>(l.weights[static_cast<std::size_t>(j)]);
  }
  return out;
}

inline ArchivedTensor to_archived(const torch::Tensor& t) {
  auto c = t.detach().contiguous().to(torch::kFloat32);
  ArchivedTensor a;
  a.shape.assign(c.sizes().begin(), c.sizes().end());
  a.data.assign(c.data_ptr<float>(), c.data_ptr<float>() + c.numel());
  return a;
}

/// Floating-point parameters and buffers of `module`, prefixed.
inline void export_module(const torch::nn::Module& module, const std::string& prefix,
                          Archive& archive) {
  for (const auto& item : module.named_parameters())
    archive.tensors[prefix + item.key()] = to_archived(item.value());
  for (const auto& item : module.named_buffers())
    if (item.value().is_floating_point())
      archive.tensors[prefix + item.key()] = to_archived(item.value());
}

inline void import_module(torch::nn::Module& module, const std::string& prefix,
                          const Archive& archive) {
  torch::NoGradGuard no_grad;
  auto assign = [&](const std::string& key, torch::Tensor& dst) {
    const auto it = archive.tensors.find(prefix + key);
    if (it == archive.tensors.end())
      fail(ErrorCode::format, "checkpoint is missing tensor '" + prefix + key + "'");
    const auto& src = it->second;
    if (std::vector<std::int64_t>(dst.sizes().begin(), dst.sizes().end()) != src.shape)
      fail(ErrorCode::format, "checkpoint tensor '" + prefix + key + "' has the wrong shape");
    auto view = torch::from_blob(const_cast<float*>(src.data.data()), dst.sizes(), torch::kFloat32);
    dst.copy_(view);
  };
  for (auto& item : module.named_parameters()) assign(item.key(), item.value());
  for (auto& item : module.named_buffers())
    if (item.value().is_floating_point()) assign(item.key(), item.value());
}

}  // namespace gemix::detail
