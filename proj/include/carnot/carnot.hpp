#pragma once

// Umbrella header. carnot/io.hpp is separate because it pulls in nlohmann/json.

#include "carnot/spectral.hpp"
#include "carnot/special.hpp"
#include "carnot/group.hpp"
#include "carnot/closed_forms.hpp"
#include "carnot/geodesics.hpp"
#include "carnot/reference.hpp"
#include "carnot/ktype.hpp"
#include "carnot/cr.hpp"
#include "carnot/n32.hpp"
#include "carnot/distance.hpp"
#include "carnot/oracle.hpp"
