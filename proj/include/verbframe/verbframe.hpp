#pragma once

#include "verbframe/bind.hpp"
#include "verbframe/catalog.hpp"
#include "verbframe/csv.hpp"
#include "verbframe/error.hpp"
#include "verbframe/eval.hpp"
#include "verbframe/exec.hpp"
#include "verbframe/expr.hpp"
#include "verbframe/format.hpp"
#include "verbframe/frame.hpp"
#include "verbframe/parse.hpp"
#include "verbframe/plan.hpp"
#include "verbframe/schema.hpp"
#include "verbframe/sql.hpp"
#include "verbframe/value.hpp"
