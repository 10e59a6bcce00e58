// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_PERSISTENCE_HPP
#define HMR_PERSISTENCE_HPP

#include "hmr/offline.hpp"

namespace hmr {

// Line-oriented text archives (.hmr): a `# key: value` header block, then
// named sections of row-major matrices at 17 significant digits. See
// docs/format.md.
void save_archive(const std::string &path, const OfflineModel &model);

// Loads and re-validates (orthonormality, triangularity, cardinal
// property); never trusts the file.
OfflineModel load_archive(const std::string &path);

} // namespace hmr

#endif // HMR_PERSISTENCE_HPP
