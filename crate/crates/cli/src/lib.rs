// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! The `pkcurve` command: batch builds and the editing service.

pub mod batch;
pub mod service;
