// qkd.hpp - everything in one include.

#pragma once

#include "qkd/bitstring.hpp"
#include "qkd/cli.hpp"
#include "qkd/detection.hpp"
#include "qkd/io.hpp"
#include "qkd/optics.hpp"
#include "qkd/otp.hpp"
#include "qkd/privacy.hpp"
#include "qkd/protocol.hpp"
#include "qkd/qmath.hpp"
#include "qkd/reconcile.hpp"
#include "qkd/states.hpp"
#include "qkd/tomography.hpp"
