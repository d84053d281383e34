#ifndef HYRQL_AST_HPP
#define HYRQL_AST_HPP

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyrql/amplitude.hpp"

namespace hyrql {

struct SourceLoc {
  int line = 0;
  int col = 0;
};

// ---------------------------------------------------------------- types

enum class TypeKind { Qbit, Data, Param, Lollipop, ClassArrow, UnitArrow };

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct Type {
  TypeKind kind;
  std::string name;           // Data: type constructor name; Param: parameter name
  std::vector<TypePtr> args;  // Data parameters, or [domain, codomain] for arrows

  const TypePtr& dom() const { return args.at(0); }
  const TypePtr& cod() const { return args.at(1); }
};

TypePtr qbit_type();
TypePtr data_type(const std::string& name, std::vector<TypePtr> args = {});
TypePtr param_type(const std::string& name);
TypePtr lollipop(TypePtr a, TypePtr b);
TypePtr class_arrow(TypePtr a, TypePtr b);
TypePtr unit_arrow(TypePtr a, TypePtr b);
TypePtr unit_type();
TypePtr bit_type();
TypePtr nat_type();
TypePtr list_type(TypePtr elem);
TypePtr tensor_type(TypePtr a, TypePtr b);

bool type_equal(const TypePtr& a, const TypePtr& b);
bool is_basic(const TypePtr& t);
bool is_arrow(const TypePtr& t);
std::string type_str(const TypePtr& t);

// ---------------------------------------------------------------- terms

enum class Tag { Var, Ket0, Ket1, QCase, Cons, Match, Lambda, LetRec, Unit, App, Sum, Shape };

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Branch {
  std::string ctor;
  std::vector<std::string> vars;
  TermPtr body;
};

struct SumItem {
  Amplitude amp;
  TermPtr term;
};

struct Term {
  Tag tag = Tag::Var;
  std::string name;             // Var, Cons symbol, Lambda binder, LetRec function name
  std::string name2;            // LetRec parameter
  std::vector<TermPtr> kids;    // QCase [s,t0,t1]; Cons args; Match [s]; Lambda/LetRec/Unit/Shape [body]; App [fn,arg]
  std::vector<Branch> branches; // Match
  std::vector<SumItem> items;   // Sum

  TypePtr ann;                  // ascribed type of a Lambda/LetRec
  bool orthogonal_annot = false;
  std::string hint;             // definition name, used for symbol naming
  SourceLoc loc;

  std::vector<std::string> fv;  // sorted free variables

  const TermPtr& scrutinee() const { return kids.at(0); }
  const TermPtr& branch0() const { return kids.at(1); }
  const TermPtr& branch1() const { return kids.at(2); }
  const TermPtr& body() const { return kids.at(0); }
  const TermPtr& fn() const { return kids.at(0); }
  const TermPtr& arg() const { return kids.at(1); }
};

TermPtr mk_var(const std::string& name);
TermPtr mk_ket(int bit);
TermPtr mk_qcase(TermPtr s, TermPtr t0, TermPtr t1, bool orthogonal_annot = false);
TermPtr mk_cons(const std::string& ctor, std::vector<TermPtr> args = {});
TermPtr mk_match(TermPtr s, std::vector<Branch> branches);
TermPtr mk_lambda(const std::string& x, TermPtr body, TypePtr ann = nullptr);
TermPtr mk_letrec(const std::string& f, const std::string& x, TermPtr body, TypePtr ann = nullptr);
TermPtr mk_unit(TermPtr body);
TermPtr mk_app(TermPtr f, TermPtr a);
TermPtr mk_apps(TermPtr f, const std::vector<TermPtr>& args);
TermPtr mk_sum(std::vector<SumItem> items, bool orthogonal_annot = false);
TermPtr mk_shape(TermPtr body);
TermPtr mk_nat(unsigned n);
TermPtr mk_list(const std::vector<TermPtr>& elems);
TermPtr mk_pair(TermPtr a, TermPtr b);

// Copy of t with presentation fields replaced.
TermPtr with_annotation(const TermPtr& t, TypePtr ann);
TermPtr with_hint(const TermPtr& t, const std::string& hint);
TermPtr with_loc(const TermPtr& t, SourceLoc loc);
TermPtr with_orthogonal(const TermPtr& t);

const std::vector<std::string>& free_vars(const TermPtr& t);
bool occurs_free(const std::string& x, const TermPtr& t);
bool is_closed(const TermPtr& t);

using Subst = std::map<std::string, TermPtr>;

// Capture-avoiding simultaneous substitution.
TermPtr substitute(const TermPtr& t, const Subst& sigma);

std::string fresh_name(const std::string& base);

// Alpha-equivalence aware total order; presentation fields are ignored.
int alpha_compare(const TermPtr& a, const TermPtr& b);
bool alpha_equal(const TermPtr& a, const TermPtr& b);

// Renames every binder so that no name is bound twice and no binder shadows a free name.
TermPtr uniquify_binders(const TermPtr& t);

bool is_pure(const TermPtr& t);
bool is_value(const TermPtr& t);
std::size_t term_size(const TermPtr& t);

// ---------------------------------------------------------------- constructors

struct ConstructorSig {
  std::string name;
  std::string type_name;
  std::vector<TypePtr> arg_types;  // may mention Param types of the owning family
  bool shadow = false;
};

struct TypeFamily {
  std::string name;
  std::vector<std::string> params;
  std::vector<std::string> ctors;
  bool structural = false;  // shadow is the same family at shaped parameters
  bool shadow = false;
};

struct RegistryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Registry {
public:
  Registry();
  Registry(const Registry& other);
  Registry& operator=(const Registry& other);

  void declare_type(const std::string& name,
                    const std::vector<std::pair<std::string, std::vector<TypePtr>>>& ctors);

  const ConstructorSig* find(const std::string& ctor) const;
  bool is_constructor(const std::string& name) const { return find(name) != nullptr; }
  std::size_t arity(const std::string& ctor) const;
  const TypeFamily* family(const std::string& type_name) const;
  std::vector<std::string> constructors_of(const std::string& type_name) const;
  // Non-shadow constructors in declaration order.
  std::vector<std::string> base_constructors() const;
  // Families introduced through declare_type, in declaration order.
  std::vector<std::string> declared_types() const;

  // Argument types of ctor when producing a value of type result.
  std::vector<TypePtr> instantiate(const std::string& ctor, const TypePtr& result) const;
  // Result type given argument types, when all parameters are determined.
  std::optional<TypePtr> result_from_args(const std::string& ctor,
                                          const std::vector<TypePtr>& args) const;
  bool is_parametric(const std::string& ctor) const;

  bool is_quantum(const TypePtr& t) const;
  bool is_classical(const TypePtr& t) const { return !is_quantum(t); }
  // nullopt stands for infinite depth.
  std::optional<std::size_t> type_depth(const TypePtr& t) const;
  TypePtr shape_type(const TypePtr& t) const;
  std::string shadow_ctor(const std::string& ctor) const;
  // All closed pure values of a finite basic type; nullopt if infinite or above limit.
  std::optional<std::vector<TermPtr>> basis(const TypePtr& t, std::size_t limit) const;

  bool validate_type(const TypePtr& t, std::string* why = nullptr) const;

private:
  void add_family(TypeFamily fam, std::vector<ConstructorSig> sigs) const;
  bool quantum_rec(const TypePtr& t, std::set<std::string>& visiting) const;
  std::optional<std::size_t> depth_rec(const TypePtr& t, std::set<std::string>& visiting) const;

  mutable std::recursive_mutex mu_;
  mutable std::map<std::string, ConstructorSig> ctors_;
  mutable std::map<std::string, TypeFamily> families_;
  mutable std::vector<std::string> order_;
  std::vector<std::string> declared_;
};

// ---------------------------------------------------------------- contexts

struct Context {
  std::map<std::string, TypePtr> gamma;  // non-linear
  std::map<std::string, TypePtr> boxed;  // boxed non-linear variables
  std::map<std::string, TypePtr> delta;  // linear

  bool compatible() const;
};

} // namespace hyrql

#endif
