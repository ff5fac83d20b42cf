#pragma once

#include <string>
#include <vector>

#include "nn.hpp"
#include "tensor.hpp"

namespace gi {

// Shared checkpoint container used by generator ("GCKPT1"), encoder
// ("ECKPT1") and feature extractor ("FCKPT1") files. Layout: magic,
// format version, latent_dim, image shape, canonical layer-spec text,
// then named float32 tensors in declaration order.
struct CheckpointHeader {
  std::string magic;  // 6 bytes
  uint32_t version = 1;
  int32_t latent_dim = 0;
  int32_t image_h = 0, image_w = 0, image_c = 0;
  std::string layer_spec;
};

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const std::vector<nn::ParamRef>& params);

// Reads the header and loads tensors into the already-built network's
// parameters; names, order and shapes must match exactly.
CheckpointHeader load_checkpoint_header(const std::string& path,
                                        const std::string& expect_magic);
void load_checkpoint_tensors(const std::string& path,
                             const std::string& expect_magic,
                             const std::vector<nn::ParamRef>& params);

}  // namespace gi
