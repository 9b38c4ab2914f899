// Hot-path kernels for the concurrent graph: lock-free adjacency lists with
// marked pointers, the wait-free helping engine and the fast/slow facade.
// Mirrors the pure-Python backend in pure.py; see its module docstring for
// the settle/claim/victim consensus scheme. No Python objects in here; every
// function is safe to call without the GIL.
//
// Memory: nodes and descriptors are never freed during a run (cleanup only
// unlinks). Every allocation is prefixed with a header and pushed on a
// per-graph list so graph_destroy can release everything at once.

#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <new>

namespace wfg {

using std::int64_t;
using std::uint64_t;
using std::uint8_t;
using word = std::uintptr_t;

constexpr int64_t KMIN = INT64_MIN;
constexpr int64_t KMAX = INT64_MAX;

// settle states (insert-outcome consensus)
enum : uint8_t { ST_PENDING = 0, ST_LIVE = 1, ST_VOID_DUP = 2, ST_VOID_ENDPOINT = 3 };

// op kinds; values match the Python OpKind enum
enum : int {
  OP_ADD_V = 1, OP_REM_V = 2, OP_FIND_V = 3,
  OP_ADD_E = 4, OP_REM_E = 5, OP_FIND_E = 6,
  OP_DONE_OK = 7, OP_DONE_FAIL = 8
};

// edge result codes; values match the Python EdgeOp enum
enum : int {
  E_ADDED = 1, E_ALREADY = 2, E_REMOVED = 3, E_NOT_PRESENT = 4,
  E_PRESENT = 5, V_NOT_PRESENT = 6, VE_NOT_PRESENT = 7
};

constexpr int RES_EXHAUSTED = -1;
constexpr int RES_BAD_PUBLISH = -2;

// claim / seal tokens: distinguished non-heap addresses, compared only
static char token_block[4];
inline word TOK_FAST() { return (word)&token_block[0]; }
inline word TOK_SEAL_ABSENT() { return (word)&token_block[1]; }
inline word TOK_SEAL_VNP() { return (word)&token_block[2]; }
inline word TOK_SEAL_ENP() { return (word)&token_block[3]; }

inline word pk(const void* p, bool m) { return (word)p | (word)(m ? 1 : 0); }
inline bool mk(word w) { return (w & 1) != 0; }
template <class T> inline T* tg(word w) { return (T*)(w & ~(word)1); }

// ---------------------------------------------------------------- CAS log

struct CasRec { word cell; word oldv; word newv; };

struct CasLog {
  CasRec* buf = nullptr;
  size_t cap = 0;
  std::atomic<size_t> idx{0};
  std::atomic<int> overflow{0};
};

// ---------------------------------------------------------------- structs

struct VNode;

struct ENode {
  int64_t key;
  VNode* dest;                  // destination vertex; set before linking
  std::atomic<word> next;       // packed (ENode*, mark)
  std::atomic<uint8_t> settled;
  std::atomic<word> claim;      // 0 / TOK_FAST / OpDesc*
};

struct VNode {
  int64_t key;
  std::atomic<word> next;       // packed (VNode*, mark)
  ENode* ehead;                 // per-vertex edge sentinels
  ENode* etail;
  std::atomic<uint8_t> settled;
  std::atomic<word> claim;
};

struct OpDesc {
  uint64_t phase;
  int kind;
  VNode* vnode;
  ENode* enode;
  VNode* src;
  VNode* dst;
  int result;
  std::atomic<word> victim;     // 0 / victim node / seal token
};

struct AllocHdr { AllocHdr* next; };

struct Graph {
  VNode* head = nullptr;
  VNode* tail = nullptr;
  std::atomic<AllocHdr*> allocs{nullptr};
  std::atomic<uint64_t> retired_v{0};
  std::atomic<uint64_t> retired_e{0};
  std::atomic<int64_t> inject{0};
  CasLog* log = nullptr;
};

// ---------------------------------------------------------------- memory

inline void* galloc(Graph* g, size_t n) {
  AllocHdr* h = (AllocHdr*)std::malloc(sizeof(AllocHdr) + n);
  AllocHdr* old = g->allocs.load(std::memory_order_relaxed);
  do { h->next = old; } while (!g->allocs.compare_exchange_weak(old, h));
  return (void*)(h + 1);
}

inline void log_success(Graph* g, const void* cell, word o, word n) {
  CasLog* L = g->log;
  if (!L) return;
  size_t i = L->idx.fetch_add(1);
  if (i < L->cap) L->buf[i] = CasRec{(word)cell, o, n};
  else L->overflow.store(1);
}

inline bool cas_cell(Graph* g, std::atomic<word>& c, word expect, word desired) {
  word e = expect;
  if (c.compare_exchange_strong(e, desired)) {
    if (g->log) log_success(g, &c, expect, desired);
    return true;
  }
  return false;
}

inline void set_mark(Graph* g, std::atomic<word>& c) {
  for (;;) {
    word w = c.load();
    if (mk(w)) return;
    if (cas_cell(g, c, w, w | 1)) return;
  }
}

inline ENode* make_enode(Graph* g, int64_t key, VNode* dest, uint8_t settled, ENode* nxt) {
  ENode* e = (ENode*)galloc(g, sizeof(ENode));
  e->key = key;
  e->dest = dest;
  new (&e->next) std::atomic<word>(pk(nxt, false));
  new (&e->settled) std::atomic<uint8_t>(settled);
  new (&e->claim) std::atomic<word>(0);
  return e;
}

inline VNode* make_vnode(Graph* g, int64_t key, uint8_t settled, bool with_edges) {
  VNode* v = (VNode*)galloc(g, sizeof(VNode));
  v->key = key;
  new (&v->next) std::atomic<word>(pk(nullptr, false));
  new (&v->settled) std::atomic<uint8_t>(settled);
  new (&v->claim) std::atomic<word>(0);
  if (with_edges) {
    v->etail = make_enode(g, KMAX, nullptr, ST_LIVE, nullptr);
    v->ehead = make_enode(g, KMIN, nullptr, ST_LIVE, v->etail);
  } else {
    v->ehead = nullptr;
    v->etail = nullptr;
  }
  return v;
}

inline OpDesc* make_desc(Graph* g, uint64_t phase, int kind, VNode* vnode, ENode* enode,
                         VNode* src, VNode* dst, int result) {
  OpDesc* d = (OpDesc*)galloc(g, sizeof(OpDesc));
  d->phase = phase;
  d->kind = kind;
  d->vnode = vnode;
  d->enode = enode;
  d->src = src;
  d->dst = dst;
  d->result = result;
  new (&d->victim) std::atomic<word>(0);
  return d;
}

inline Graph* graph_create(size_t log_cap) {
  Graph* g = new Graph();
  if (log_cap) {
    g->log = new CasLog();
    g->log->buf = (CasRec*)std::malloc(sizeof(CasRec) * log_cap);
    g->log->cap = log_cap;
  }
  g->tail = make_vnode(g, KMAX, ST_LIVE, true);
  g->head = make_vnode(g, KMIN, ST_LIVE, true);
  g->head->next.store(pk(g->tail, false));
  return g;
}

inline void graph_destroy(Graph* g) {
  AllocHdr* h = g->allocs.load();
  while (h) {
    AllocHdr* n = h->next;
    std::free(h);
    h = n;
  }
  if (g->log) {
    std::free(g->log->buf);
    delete g->log;
  }
  delete g;
}

inline bool take_inject(Graph* g) {
  for (;;) {
    int64_t n = g->inject.load(std::memory_order_relaxed);
    if (n <= 0) return false;
    if (g->inject.compare_exchange_strong(n, n - 1)) return true;
  }
}

// ---------------------------------------------------------------- traversal

inline uint8_t force_settle(std::atomic<uint8_t>& s, uint8_t want) {
  uint8_t e = ST_PENDING;
  s.compare_exchange_strong(e, want);
  return s.load();
}

inline bool vertex_live(VNode* v) {
  return !mk(v->next.load()) && v->settled.load() == ST_LIVE;
}

// Window (pred, curr) with curr->key >= key. Unlinks dead vertices; VOID
// nodes are marked first so stale inserts behind them fail on the mark bit.
inline void locate_v(Graph* g, int64_t key, VNode** opred, VNode** ocurr) {
  for (;;) {
    VNode* pred = g->head;
    VNode* curr = tg<VNode>(pred->next.load());
    bool restart = false;
    for (;;) {
      word cw = curr->next.load();
      if (mk(cw) || curr->settled.load() >= ST_VOID_DUP) {
        if (!mk(cw)) {
          cas_cell(g, curr->next, cw, cw | 1);
          continue;
        }
        if (!cas_cell(g, pred->next, pk(curr, false), pk(tg<VNode>(cw), false))) {
          restart = true;
          break;
        }
        g->retired_v.fetch_add(1);
        curr = tg<VNode>(cw);
        continue;
      }
      if (curr->key >= key) { *opred = pred; *ocurr = curr; return; }
      pred = curr;
      curr = tg<VNode>(cw);
    }
    if (restart) continue;
  }
}

// Window in v's edge list; unlinks marked, VOID and dead-destination edges.
inline void locate_e(Graph* g, VNode* v, int64_t key, ENode** opred, ENode** ocurr) {
  for (;;) {
    ENode* pred = v->ehead;
    ENode* curr = tg<ENode>(pred->next.load());
    bool restart = false;
    for (;;) {
      word cw = curr->next.load();
      VNode* dest = curr->dest;
      bool dead = mk(cw) || curr->settled.load() >= ST_VOID_DUP ||
                  (dest != nullptr &&
                   (mk(dest->next.load()) || dest->settled.load() >= ST_VOID_DUP));
      if (dead) {
        if (!mk(cw)) {
          cas_cell(g, curr->next, cw, cw | 1);
          continue;
        }
        if (!cas_cell(g, pred->next, pk(curr, false), pk(tg<ENode>(cw), false))) {
          restart = true;
          break;
        }
        g->retired_e.fetch_add(1);
        curr = tg<ENode>(cw);
        continue;
      }
      if (curr->key >= key) { *opred = pred; *ocurr = curr; return; }
      pred = curr;
      curr = tg<ENode>(cw);
    }
    if (restart) continue;
  }
}

// Read-only walk to the first node with key >= search key.
inline VNode* find_v(Graph* g, int64_t key) {
  VNode* n = g->head;
  while (n->key < key) n = tg<VNode>(n->next.load());
  return n;
}

// Validate both endpoints live in one read-only pass.
inline bool locate_two(Graph* g, int64_t k1, int64_t k2, VNode** v1, VNode** v2) {
  int64_t lo = k1 < k2 ? k1 : k2;
  int64_t hi = k1 < k2 ? k2 : k1;
  VNode* n = find_v(g, lo);
  if (n->key != lo || !vertex_live(n)) return false;
  VNode* a = n;
  while (n->key < hi) n = tg<VNode>(n->next.load());
  if (n->key != hi || !vertex_live(n)) return false;
  if (k1 < k2) { *v1 = a; *v2 = n; } else { *v1 = n; *v2 = a; }
  return true;
}

// ---------------------------------------------------------------- fast path

inline bool user_key(int64_t k) { return k > KMIN && k < KMAX; }

inline int add_vertex(Graph* g, int64_t key, int64_t budget) {
  if (!user_key(key)) return 0;
  int64_t fails = 0;
  VNode* node = nullptr;
  for (;;) {
    VNode *pred, *curr;
    locate_v(g, key, &pred, &curr);
    if (curr->key == key) {
      if (force_settle(curr->settled, ST_LIVE) == ST_LIVE) return 0;
      continue;
    }
    if (!node) node = make_vnode(g, key, ST_LIVE, true);
    node->next.store(pk(curr, false));
    if (!take_inject(g) && cas_cell(g, pred->next, pk(curr, false), pk(node, false)))
      return 1;
    if (budget >= 0 && ++fails >= budget) return RES_EXHAUSTED;
  }
}

inline int remove_vertex(Graph* g, int64_t key, int64_t budget) {
  if (!user_key(key)) return 0;
  int64_t fails = 0;
  for (;;) {
    VNode *pred, *curr;
    locate_v(g, key, &pred, &curr);
    if (curr->key != key) return 0;
    if (force_settle(curr->settled, ST_LIVE) != ST_LIVE) continue;
    word cw = curr->next.load();
    if (mk(cw)) return 0;
    if (!take_inject(g) && cas_cell(g, curr->next, cw, cw | 1)) {
      word zero = 0;
      bool mine = curr->claim.compare_exchange_strong(zero, TOK_FAST());
      if (cas_cell(g, pred->next, pk(curr, false), pk(tg<VNode>(cw), false)))
        g->retired_v.fetch_add(1);
      return mine ? 1 : 0;
    }
    if (budget >= 0 && ++fails >= budget) return RES_EXHAUSTED;
  }
}

inline int contains_vertex(Graph* g, int64_t key) {
  if (!user_key(key)) return 0;
  VNode* n = find_v(g, key);
  return (n->key == key && vertex_live(n)) ? 1 : 0;
}

inline int add_edge(Graph* g, int64_t k1, int64_t k2, int64_t budget) {
  if (k1 == k2 || !user_key(k1) || !user_key(k2)) return V_NOT_PRESENT;
  int64_t fails = 0;
  ENode* node = nullptr;
  for (;;) {
    VNode *v1, *v2;
    if (!locate_two(g, k1, k2, &v1, &v2)) return V_NOT_PRESENT;
    ENode *pred, *curr;
    locate_e(g, v1, k2, &pred, &curr);
    if (curr->key == k2) {
      if (force_settle(curr->settled, ST_LIVE) == ST_LIVE) return E_ALREADY;
      continue;
    }
    if (!node) node = make_enode(g, k2, v2, ST_LIVE, nullptr);
    node->dest = v2;
    node->next.store(pk(curr, false));
    if (!take_inject(g) && cas_cell(g, pred->next, pk(curr, false), pk(node, false)))
      return E_ADDED;
    if (budget >= 0 && ++fails >= budget) return RES_EXHAUSTED;
  }
}

inline int remove_edge(Graph* g, int64_t k1, int64_t k2, int64_t budget) {
  if (k1 == k2 || !user_key(k1) || !user_key(k2)) return V_NOT_PRESENT;
  int64_t fails = 0;
  for (;;) {
    VNode *v1, *v2;
    if (!locate_two(g, k1, k2, &v1, &v2)) return V_NOT_PRESENT;
    ENode *pred, *curr;
    locate_e(g, v1, k2, &pred, &curr);
    if (curr->key != k2) return E_NOT_PRESENT;
    if (force_settle(curr->settled, ST_LIVE) != ST_LIVE) continue;
    word cw = curr->next.load();
    if (mk(cw)) return E_NOT_PRESENT;
    if (!take_inject(g) && cas_cell(g, curr->next, cw, cw | 1)) {
      word zero = 0;
      bool mine = curr->claim.compare_exchange_strong(zero, TOK_FAST());
      if (cas_cell(g, pred->next, pk(curr, false), pk(tg<ENode>(cw), false)))
        g->retired_e.fetch_add(1);
      return mine ? E_REMOVED : E_NOT_PRESENT;
    }
    if (budget >= 0 && ++fails >= budget) return RES_EXHAUSTED;
  }
}

inline int contains_edge(Graph* g, int64_t k1, int64_t k2) {
  if (k1 == k2 || !user_key(k1) || !user_key(k2)) return V_NOT_PRESENT;
  VNode *v1, *v2;
  if (!locate_two(g, k1, k2, &v1, &v2)) return V_NOT_PRESENT;
  ENode* e = v1->ehead;
  while (e->key < k2) e = tg<ENode>(e->next.load());
  VNode* dest = e->dest;
  bool present = e->key == k2 && !mk(e->next.load()) && e->settled.load() == ST_LIVE &&
                 dest != nullptr && vertex_live(dest) && vertex_live(v1);
  return present ? E_PRESENT : VE_NOT_PRESENT;
}

// ---------------------------------------------------------------- engine

struct Engine {
  Graph* g = nullptr;
  int capacity = 0;
  std::atomic<int> registered{0};
  std::atomic<OpDesc*>* slots = nullptr;
  std::atomic<uint64_t> phase{0};
  bool helped_lookups = true;
  bool track_steps = false;
  std::atomic<uint64_t> max_rounds{0};
  std::atomic<uint64_t> completions_won{0};
  std::atomic<uint64_t> completions_lost{0};
};

inline Engine* engine_create(Graph* g, int capacity, bool helped_lookups, bool track_steps) {
  Engine* e = new Engine();
  e->g = g;
  e->capacity = capacity;
  e->helped_lookups = helped_lookups;
  e->track_steps = track_steps;
  e->slots = (std::atomic<OpDesc*>*)std::malloc(sizeof(std::atomic<OpDesc*>) * capacity);
  for (int i = 0; i < capacity; ++i)
    new (&e->slots[i]) std::atomic<OpDesc*>(make_desc(g, 0, OP_DONE_OK, nullptr, nullptr,
                                                      nullptr, nullptr, 1));
  return e;
}

inline void engine_destroy(Engine* e) {
  std::free(e->slots);
  delete e;
}

inline uint64_t next_phase(Engine* e) { return e->phase.fetch_add(1) + 1; }

inline bool slot_pending(const OpDesc* d) {
  return d->kind >= OP_ADD_V && d->kind <= OP_FIND_E;
}

inline bool publish(Engine* e, int tid, OpDesc* d) {
  OpDesc* cur = e->slots[tid].load();
  if (slot_pending(cur)) return false;
  e->slots[tid].store(d);
  return true;
}

inline bool complete(Engine* e, int tid, OpDesc* d, bool ok, int result) {
  OpDesc* nd = make_desc(e->g, d->phase, ok ? OP_DONE_OK : OP_DONE_FAIL, d->vnode, d->enode,
                         d->src, d->dst, result);
  OpDesc* expect = d;
  bool won = e->slots[tid].compare_exchange_strong(expect, nd);
  if (won) e->completions_won.fetch_add(1);
  else e->completions_lost.fetch_add(1);
  return won;
}

inline OpDesc* slot_matches(Engine* e, int tid, uint64_t phase, int kind) {
  OpDesc* d = e->slots[tid].load();
  if (d->phase != phase || d->kind != kind) return nullptr;
  return d;
}

inline void note_rounds(Engine* e, uint64_t r) {
  if (!e->track_steps) return;
  uint64_t cur = e->max_rounds.load();
  while (r > cur && !e->max_rounds.compare_exchange_weak(cur, r)) {}
}

inline void help_add_v(Engine* e, int tid, uint64_t phase) {
  Graph* g = e->g;
  uint64_t rounds = 0;
  for (;;) {
    ++rounds;
    OpDesc* d = slot_matches(e, tid, phase, OP_ADD_V);
    if (!d) { note_rounds(e, rounds); return; }
    VNode* n = d->vnode;
    word nv0 = n->next.load();
    VNode *pred, *curr;
    locate_v(g, n->key, &pred, &curr);
    uint8_t st = n->settled.load();
    if (st >= ST_VOID_DUP) { complete(e, tid, d, false, 0); continue; }
    if (curr == n) {
      if (force_settle(n->settled, ST_LIVE) == ST_LIVE) {
        complete(e, tid, d, true, 1);
      } else {
        set_mark(g, n->next);
        complete(e, tid, d, false, 0);
      }
      continue;
    }
    if (mk(n->next.load())) {
      // only reachable nodes get marked, so n was linked; settle the verdict
      // (no-op unless still PENDING) and report accordingly
      if (force_settle(n->settled, ST_LIVE) == ST_LIVE) complete(e, tid, d, true, 1);
      else complete(e, tid, d, false, 0);
      continue;
    }
    if (curr->key == n->key) {
      if (force_settle(curr->settled, ST_LIVE) == ST_LIVE) {
        if (force_settle(n->settled, ST_VOID_DUP) >= ST_VOID_DUP)
          complete(e, tid, d, false, 0);
      }
      continue;
    }
    if (mk(nv0)) continue;
    if (cas_cell(g, n->next, nv0, pk(curr, false))) {
      if (cas_cell(g, pred->next, pk(curr, false), pk(n, false))) {
        if (force_settle(n->settled, ST_LIVE) == ST_LIVE) {
          complete(e, tid, d, true, 1);
        } else {
          set_mark(g, n->next);
          complete(e, tid, d, false, 0);
        }
        continue;
      }
    }
  }
}

inline void help_rem_v(Engine* e, int tid, uint64_t phase) {
  Graph* g = e->g;
  uint64_t rounds = 0;
  for (;;) {
    ++rounds;
    OpDesc* d = slot_matches(e, tid, phase, OP_REM_V);
    if (!d) { note_rounds(e, rounds); return; }
    int64_t key = d->vnode->key;
    word vic = d->victim.load();
    if (vic == TOK_SEAL_ABSENT()) { complete(e, tid, d, false, 0); continue; }
    if (vic == 0) {
      VNode *pred, *curr;
      locate_v(g, key, &pred, &curr);
      if (curr->key != key) {
        word zero = 0;
        d->victim.compare_exchange_strong(zero, TOK_SEAL_ABSENT());
        continue;
      }
      if (force_settle(curr->settled, ST_LIVE) != ST_LIVE) continue;
      word zero = 0;
      d->victim.compare_exchange_strong(zero, (word)curr);
      continue;
    }
    VNode* v = (VNode*)vic;
    word zero = 0;
    v->claim.compare_exchange_strong(zero, (word)d);
    word owner = v->claim.load();
    set_mark(g, v->next);
    VNode *pred, *curr;
    locate_v(g, key, &pred, &curr);  // best-effort physical unlink
    if (owner == (word)d) complete(e, tid, d, true, 1);
    else complete(e, tid, d, false, 0);
    continue;
  }
}

inline void help_con_v(Engine* e, int tid, uint64_t phase) {
  OpDesc* d = slot_matches(e, tid, phase, OP_FIND_V);
  if (!d) return;
  int found = contains_vertex(e->g, d->vnode->key);
  complete(e, tid, d, found != 0, found);
}

inline void help_add_e(Engine* e, int tid, uint64_t phase) {
  Graph* g = e->g;
  uint64_t rounds = 0;
  for (;;) {
    ++rounds;
    OpDesc* d = slot_matches(e, tid, phase, OP_ADD_E);
    if (!d) { note_rounds(e, rounds); return; }
    ENode* n = d->enode;
    VNode* vs = d->src;
    VNode* vd = d->dst;
    word nv0 = n->next.load();
    uint8_t st = n->settled.load();
    if (st == ST_VOID_DUP) { complete(e, tid, d, false, E_ALREADY); continue; }
    if (st == ST_VOID_ENDPOINT) { complete(e, tid, d, false, V_NOT_PRESENT); continue; }
    if (mk(n->next.load())) {
      // linked, then marked: by a remover (LIVE), a zombie neutralise (VOID)
      // or cleanup of a still-PENDING edge whose destination died; settle
      // the verdict before reporting
      st = force_settle(n->settled, ST_LIVE);
      if (st == ST_LIVE) complete(e, tid, d, true, E_ADDED);
      else if (st == ST_VOID_DUP) complete(e, tid, d, false, E_ALREADY);
      else complete(e, tid, d, false, V_NOT_PRESENT);
      continue;
    }
    // endpoint liveness re-checked on the captured nodes each round
    if (mk(vs->next.load()) || mk(vd->next.load())) {
      st = force_settle(n->settled, ST_VOID_ENDPOINT);
      if (st == ST_VOID_ENDPOINT) complete(e, tid, d, false, V_NOT_PRESENT);
      else if (st == ST_VOID_DUP) complete(e, tid, d, false, E_ALREADY);
      continue;
    }
    ENode *pred, *curr;
    locate_e(g, vs, n->key, &pred, &curr);
    if (curr == n) {
      if (force_settle(n->settled, ST_LIVE) == ST_LIVE) {
        complete(e, tid, d, true, E_ADDED);
      } else {
        set_mark(g, n->next);
        complete(e, tid, d, false,
                 n->settled.load() == ST_VOID_DUP ? E_ALREADY : V_NOT_PRESENT);
      }
      continue;
    }
    if (curr->key == n->key) {
      if (force_settle(curr->settled, ST_LIVE) == ST_LIVE) {
        st = force_settle(n->settled, ST_VOID_DUP);
        if (st == ST_VOID_DUP) complete(e, tid, d, false, E_ALREADY);
        else if (st == ST_VOID_ENDPOINT) complete(e, tid, d, false, V_NOT_PRESENT);
      }
      continue;
    }
    if (mk(nv0)) continue;
    if (cas_cell(g, n->next, nv0, pk(curr, false))) {
      if (cas_cell(g, pred->next, pk(curr, false), pk(n, false))) {
        if (force_settle(n->settled, ST_LIVE) == ST_LIVE) {
          complete(e, tid, d, true, E_ADDED);
        } else {
          set_mark(g, n->next);
          complete(e, tid, d, false,
                   n->settled.load() == ST_VOID_DUP ? E_ALREADY : V_NOT_PRESENT);
        }
        continue;
      }
    }
  }
}

inline void help_rem_e(Engine* e, int tid, uint64_t phase) {
  Graph* g = e->g;
  uint64_t rounds = 0;
  for (;;) {
    ++rounds;
    OpDesc* d = slot_matches(e, tid, phase, OP_REM_E);
    if (!d) { note_rounds(e, rounds); return; }
    int64_t key2 = d->enode->key;
    VNode* vs = d->src;
    VNode* vd = d->dst;
    word vic = d->victim.load();
    if (vic == TOK_SEAL_VNP()) { complete(e, tid, d, false, V_NOT_PRESENT); continue; }
    if (vic == TOK_SEAL_ENP()) { complete(e, tid, d, false, E_NOT_PRESENT); continue; }
    if (vic == 0) {
      if (mk(vs->next.load()) || mk(vd->next.load())) {
        word zero = 0;
        d->victim.compare_exchange_strong(zero, TOK_SEAL_VNP());
        continue;
      }
      ENode *pred, *curr;
      locate_e(g, vs, key2, &pred, &curr);
      if (curr->key != key2) {
        word zero = 0;
        d->victim.compare_exchange_strong(zero, TOK_SEAL_ENP());
        continue;
      }
      if (force_settle(curr->settled, ST_LIVE) != ST_LIVE) continue;
      word zero = 0;
      d->victim.compare_exchange_strong(zero, (word)curr);
      continue;
    }
    ENode* v = (ENode*)vic;
    word zero = 0;
    v->claim.compare_exchange_strong(zero, (word)d);
    word owner = v->claim.load();
    set_mark(g, v->next);
    ENode *pred, *curr;
    locate_e(g, vs, key2, &pred, &curr);  // best-effort unlink
    if (owner == (word)d) complete(e, tid, d, true, E_REMOVED);
    else complete(e, tid, d, false, E_NOT_PRESENT);
    continue;
  }
}

inline void help_con_e(Engine* e, int tid, uint64_t phase) {
  OpDesc* d = slot_matches(e, tid, phase, OP_FIND_E);
  if (!d) return;
  VNode* vs = d->src;
  int64_t key2 = d->enode->key;
  ENode* en = vs->ehead;
  while (en->key < key2) en = tg<ENode>(en->next.load());
  VNode* dest = en->dest;
  bool present = en->key == key2 && !mk(en->next.load()) && en->settled.load() == ST_LIVE &&
                 dest != nullptr && vertex_live(dest) && vertex_live(vs);
  complete(e, tid, d, present, present ? E_PRESENT : VE_NOT_PRESENT);
}

inline void help_all(Engine* e, uint64_t phase) {
  for (int tid = 0; tid < e->capacity; ++tid) {
    OpDesc* d = e->slots[tid].load();
    if (d->phase > phase) continue;
    switch (d->kind) {
      case OP_ADD_V: help_add_v(e, tid, d->phase); break;
      case OP_REM_V: help_rem_v(e, tid, d->phase); break;
      case OP_FIND_V: help_con_v(e, tid, d->phase); break;
      case OP_ADD_E: help_add_e(e, tid, d->phase); break;
      case OP_REM_E: help_rem_e(e, tid, d->phase); break;
      case OP_FIND_E: help_con_e(e, tid, d->phase); break;
      default: break;
    }
  }
}

// -- public wait-free operations (explicit slot id) --

inline int run_op(Engine* e, int tid, OpDesc* d) {
  if (!publish(e, tid, d)) return RES_BAD_PUBLISH;
  help_all(e, d->phase);
  OpDesc* r = e->slots[tid].load();
  return r->result;
}

inline int wf_add_vertex(Engine* e, int tid, int64_t key) {
  if (!user_key(key)) return 0;
  uint64_t ph = next_phase(e);
  VNode* n = make_vnode(e->g, key, ST_PENDING, true);
  return run_op(e, tid, make_desc(e->g, ph, OP_ADD_V, n, nullptr, nullptr, nullptr, -1));
}

inline int wf_remove_vertex(Engine* e, int tid, int64_t key) {
  if (!user_key(key)) return 0;
  uint64_t ph = next_phase(e);
  VNode* carrier = make_vnode(e->g, key, ST_PENDING, false);
  return run_op(e, tid, make_desc(e->g, ph, OP_REM_V, carrier, nullptr, nullptr, nullptr, -1));
}

inline int wf_contains_vertex(Engine* e, int tid, int64_t key) {
  if (!user_key(key)) return 0;
  if (!e->helped_lookups) return contains_vertex(e->g, key);
  uint64_t ph = next_phase(e);
  VNode* carrier = make_vnode(e->g, key, ST_PENDING, false);
  return run_op(e, tid, make_desc(e->g, ph, OP_FIND_V, carrier, nullptr, nullptr, nullptr, -1));
}

inline int wf_add_edge(Engine* e, int tid, int64_t k1, int64_t k2) {
  if (k1 == k2 || !user_key(k1) || !user_key(k2)) return V_NOT_PRESENT;
  VNode *v1, *v2;
  if (!locate_two(e->g, k1, k2, &v1, &v2)) return V_NOT_PRESENT;
  uint64_t ph = next_phase(e);
  ENode* n = make_enode(e->g, k2, v2, ST_PENDING, nullptr);
  return run_op(e, tid, make_desc(e->g, ph, OP_ADD_E, nullptr, n, v1, v2, -1));
}

inline int wf_remove_edge(Engine* e, int tid, int64_t k1, int64_t k2) {
  if (k1 == k2 || !user_key(k1) || !user_key(k2)) return V_NOT_PRESENT;
  VNode *v1, *v2;
  if (!locate_two(e->g, k1, k2, &v1, &v2)) return V_NOT_PRESENT;
  uint64_t ph = next_phase(e);
  ENode* carrier = make_enode(e->g, k2, v2, ST_PENDING, nullptr);
  return run_op(e, tid, make_desc(e->g, ph, OP_REM_E, nullptr, carrier, v1, v2, -1));
}

inline int wf_contains_edge(Engine* e, int tid, int64_t k1, int64_t k2) {
  if (k1 == k2 || !user_key(k1) || !user_key(k2)) return V_NOT_PRESENT;
  if (!e->helped_lookups) return contains_edge(e->g, k1, k2);
  VNode *v1, *v2;
  if (!locate_two(e->g, k1, k2, &v1, &v2)) return V_NOT_PRESENT;
  uint64_t ph = next_phase(e);
  ENode* carrier = make_enode(e->g, k2, v2, ST_PENDING, nullptr);
  return run_op(e, tid, make_desc(e->g, ph, OP_FIND_E, nullptr, carrier, v1, v2, -1));
}

// ---------------------------------------------------------------- fpsp

struct Fpsp {
  Engine* eng = nullptr;
  int64_t max_fail = 20;
  bool help_before_fast = true;
  std::atomic<uint64_t> slow[9];  // indexed by op kind
};

inline Fpsp* fpsp_create(Engine* eng, int64_t max_fail, bool help_before_fast) {
  Fpsp* f = new Fpsp();
  f->eng = eng;
  f->max_fail = max_fail;
  f->help_before_fast = help_before_fast;
  for (int i = 0; i < 9; ++i) f->slow[i].store(0);
  return f;
}

inline void fpsp_destroy(Fpsp* f) { delete f; }

inline void fpsp_pre(Fpsp* f) {
  if (f->help_before_fast) help_all(f->eng, f->eng->phase.load());
}

inline int fpsp_add_vertex(Fpsp* f, int tid, int64_t key) {
  fpsp_pre(f);
  int r = add_vertex(f->eng->g, key, f->max_fail);
  if (r != RES_EXHAUSTED) return r;
  f->slow[OP_ADD_V].fetch_add(1);
  return wf_add_vertex(f->eng, tid, key);
}

inline int fpsp_remove_vertex(Fpsp* f, int tid, int64_t key) {
  fpsp_pre(f);
  int r = remove_vertex(f->eng->g, key, f->max_fail);
  if (r != RES_EXHAUSTED) return r;
  f->slow[OP_REM_V].fetch_add(1);
  return wf_remove_vertex(f->eng, tid, key);
}

inline int fpsp_contains_vertex(Fpsp* f, int tid, int64_t key) {
  fpsp_pre(f);
  return wf_contains_vertex(f->eng, tid, key);
}

inline int fpsp_add_edge(Fpsp* f, int tid, int64_t k1, int64_t k2) {
  fpsp_pre(f);
  int r = add_edge(f->eng->g, k1, k2, f->max_fail);
  if (r != RES_EXHAUSTED) return r;
  f->slow[OP_ADD_E].fetch_add(1);
  return wf_add_edge(f->eng, tid, k1, k2);
}

inline int fpsp_remove_edge(Fpsp* f, int tid, int64_t k1, int64_t k2) {
  fpsp_pre(f);
  int r = remove_edge(f->eng->g, k1, k2, f->max_fail);
  if (r != RES_EXHAUSTED) return r;
  f->slow[OP_REM_E].fetch_add(1);
  return wf_remove_edge(f->eng, tid, k1, k2);
}

inline int fpsp_contains_edge(Fpsp* f, int tid, int64_t k1, int64_t k2) {
  fpsp_pre(f);
  return wf_contains_edge(f->eng, tid, k1, k2);
}

inline uint64_t fpsp_slow_total(Fpsp* f) {
  uint64_t t = 0;
  for (int i = 0; i < 9; ++i) t += f->slow[i].load();
  return t;
}

// ---------------------------------------------------------------- coarse lock

struct Coarse {
  Graph* g = nullptr;
  std::mutex m;
};

inline Coarse* coarse_create() {
  Coarse* c = new Coarse();
  c->g = graph_create(0);
  return c;
}

inline void coarse_destroy(Coarse* c) {
  graph_destroy(c->g);
  delete c;
}

inline int coarse_add_vertex(Coarse* c, int64_t k) { std::lock_guard<std::mutex> l(c->m); return add_vertex(c->g, k, -1); }
inline int coarse_remove_vertex(Coarse* c, int64_t k) { std::lock_guard<std::mutex> l(c->m); return remove_vertex(c->g, k, -1); }
inline int coarse_contains_vertex(Coarse* c, int64_t k) { std::lock_guard<std::mutex> l(c->m); return contains_vertex(c->g, k); }
inline int coarse_add_edge(Coarse* c, int64_t a, int64_t b) { std::lock_guard<std::mutex> l(c->m); return add_edge(c->g, a, b, -1); }
inline int coarse_remove_edge(Coarse* c, int64_t a, int64_t b) { std::lock_guard<std::mutex> l(c->m); return remove_edge(c->g, a, b, -1); }
inline int coarse_contains_edge(Coarse* c, int64_t a, int64_t b) { std::lock_guard<std::mutex> l(c->m); return contains_edge(c->g, a, b); }

// ---------------------------------------------------------------- bench

struct BenchCtl {
  std::atomic<int> stop{0};
};

inline uint64_t splitmix64(uint64_t& s) {
  uint64_t z = (s += 0x9E3779B97f4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum : int { IMPL_LOCKFREE = 0, IMPL_WF = 1, IMPL_FPSP = 2, IMPL_COARSE = 3 };

// Runs operations drawn from the cumulative distribution (cdf, 6 entries on
// a 1e6 scale, op order addV remV conV addE remE conE) with keys uniform on
// [1, key_max] until *stop* is set. Returns the number of completed ops.
inline uint64_t bench_worker(int impl, Graph* g, Engine* eng, Fpsp* f, Coarse* co, int tid,
                             BenchCtl* ctl, uint64_t seed, const uint64_t* cdf,
                             int64_t key_max) {
  uint64_t s = seed ? seed : 0x9E3779B97f4A7C15ULL;
  uint64_t count = 0;
  while (!ctl->stop.load(std::memory_order_relaxed)) {
    uint64_t which = splitmix64(s) % 1000000ULL;
    int op = 5;
    for (int i = 0; i < 5; ++i) {
      if (which < cdf[i]) { op = i; break; }
    }
    int64_t k1 = (int64_t)(splitmix64(s) % (uint64_t)key_max) + 1;
    int64_t k2 = (int64_t)(splitmix64(s) % (uint64_t)key_max) + 1;
    while (k2 == k1 && key_max > 1) k2 = (int64_t)(splitmix64(s) % (uint64_t)key_max) + 1;
    switch (impl) {
      case IMPL_LOCKFREE:
        switch (op) {
          case 0: add_vertex(g, k1, -1); break;
          case 1: remove_vertex(g, k1, -1); break;
          case 2: contains_vertex(g, k1); break;
          case 3: add_edge(g, k1, k2, -1); break;
          case 4: remove_edge(g, k1, k2, -1); break;
          default: contains_edge(g, k1, k2); break;
        }
        break;
      case IMPL_WF:
        switch (op) {
          case 0: wf_add_vertex(eng, tid, k1); break;
          case 1: wf_remove_vertex(eng, tid, k1); break;
          case 2: wf_contains_vertex(eng, tid, k1); break;
          case 3: wf_add_edge(eng, tid, k1, k2); break;
          case 4: wf_remove_edge(eng, tid, k1, k2); break;
          default: wf_contains_edge(eng, tid, k1, k2); break;
        }
        break;
      case IMPL_FPSP:
        switch (op) {
          case 0: fpsp_add_vertex(f, tid, k1); break;
          case 1: fpsp_remove_vertex(f, tid, k1); break;
          case 2: fpsp_contains_vertex(f, tid, k1); break;
          case 3: fpsp_add_edge(f, tid, k1, k2); break;
          case 4: fpsp_remove_edge(f, tid, k1, k2); break;
          default: fpsp_contains_edge(f, tid, k1, k2); break;
        }
        break;
      default:
        switch (op) {
          case 0: coarse_add_vertex(co, k1); break;
          case 1: coarse_remove_vertex(co, k1); break;
          case 2: coarse_contains_vertex(co, k1); break;
          case 3: coarse_add_edge(co, k1, k2); break;
          case 4: coarse_remove_edge(co, k1, k2); break;
          default: coarse_contains_edge(co, k1, k2); break;
        }
        break;
    }
    ++count;
  }
  return count;
}

// ------------------------------------------------------- wrapper accessors
// Plain-function views over atomics so the Cython layer never touches
// std::atomic directly. Walks are done GIL-held on quiescent structures.

inline VNode* g_head(Graph* g) { return g->head; }
inline VNode* v_next(VNode* v) { return tg<VNode>(v->next.load()); }
inline bool v_marked(VNode* v) { return mk(v->next.load()); }
inline int v_settled(VNode* v) { return v->settled.load(); }
inline int64_t v_key(VNode* v) { return v->key; }
inline bool v_claimed(VNode* v) { return v->claim.load() != 0; }
inline ENode* v_ehead(VNode* v) { return v->ehead; }
inline ENode* e_next(ENode* e) { return tg<ENode>(e->next.load()); }
inline bool e_marked(ENode* e) { return mk(e->next.load()); }
inline int e_settled(ENode* e) { return e->settled.load(); }
inline int64_t e_key(ENode* e) { return e->key; }
inline VNode* e_dest(ENode* e) { return e->dest; }

inline uint64_t g_retired_v(Graph* g) { return g->retired_v.load(); }
inline uint64_t g_retired_e(Graph* g) { return g->retired_e.load(); }
inline void g_inject(Graph* g, int64_t n) { g->inject.fetch_add(n); }

inline size_t log_count(Graph* g) {
  if (!g->log) return 0;
  size_t i = g->log->idx.load();
  return i < g->log->cap ? i : g->log->cap;
}
inline int log_overflow(Graph* g) { return g->log ? g->log->overflow.load() : 0; }
inline void log_entry(Graph* g, size_t i, word* cell, word* oldv, word* newv) {
  *cell = g->log->buf[i].cell;
  *oldv = g->log->buf[i].oldv;
  *newv = g->log->buf[i].newv;
}

// Cleanup traversal over the whole structure (vertex chain + live edge lists).
inline void purge(Graph* g) {
  VNode *p, *c;
  locate_v(g, KMAX - 1, &p, &c);
  VNode* v = tg<VNode>(g->head->next.load());
  while (v->key < KMAX) {
    if (!mk(v->next.load()) && v->settled.load() == ST_LIVE && v->ehead) {
      ENode *ep, *ec;
      locate_e(g, v, KMAX - 1, &ep, &ec);
    }
    v = tg<VNode>(v->next.load());
  }
}

inline int eng_register(Engine* e) {
  int n = e->registered.fetch_add(1) + 1;
  return n <= e->capacity ? n - 1 : -1;
}
inline uint64_t eng_phase(Engine* e) { return e->phase.load(); }
inline int slot_kind(Engine* e, int tid) { return e->slots[tid].load()->kind; }
inline uint64_t slot_phase(Engine* e, int tid) { return e->slots[tid].load()->phase; }
inline int slot_result(Engine* e, int tid) { return e->slots[tid].load()->result; }
inline uint64_t eng_max_rounds(Engine* e) { return e->max_rounds.load(); }
inline uint64_t eng_completions_won(Engine* e) { return e->completions_won.load(); }
inline uint64_t eng_completions_lost(Engine* e) { return e->completions_lost.load(); }

// Test hooks: publish without helping. Returns the phase, or 0 when edge
// endpoint validation failed (phases start at 1). The slot-not-pending
// precondition is checked by the wrapper.
inline uint64_t publish_vertex_op(Engine* e, int tid, int kind, int64_t key) {
  uint64_t ph = next_phase(e);
  VNode* n = make_vnode(e->g, key, ST_PENDING, kind == OP_ADD_V);
  publish(e, tid, make_desc(e->g, ph, kind, n, nullptr, nullptr, nullptr, -1));
  return ph;
}
inline uint64_t publish_edge_op(Engine* e, int tid, int kind, int64_t k1, int64_t k2) {
  VNode *v1, *v2;
  if (!locate_two(e->g, k1, k2, &v1, &v2)) return 0;
  uint64_t ph = next_phase(e);
  ENode* n = make_enode(e->g, k2, v2, ST_PENDING, nullptr);
  publish(e, tid, make_desc(e->g, ph, kind, nullptr, n, v1, v2, -1));
  return ph;
}

inline uint64_t fpsp_slow_for(Fpsp* f, int kind) { return f->slow[kind].load(); }

// Debug hooks: apply the logical-deletion mark without unlink or claim,
// simulating an in-progress removal for traversal tests.
inline int dbg_mark_vertex(Graph* g, int64_t key) {
  VNode* n = find_v(g, key);
  if (n->key != key || mk(n->next.load())) return 0;
  set_mark(g, n->next);
  return 1;
}
inline int dbg_mark_edge(Graph* g, int64_t k1, int64_t k2) {
  VNode* n = find_v(g, k1);
  if (n->key != k1 || !n->ehead) return 0;
  ENode* e = n->ehead;
  while (e->key < k2) e = tg<ENode>(e->next.load());
  if (e->key != k2 || mk(e->next.load())) return 0;
  set_mark(g, e->next);
  return 1;
}

// Single-word marked-CAS cell used by the primitive-level tests.
struct TestCell {
  std::atomic<word> w;
};
inline TestCell* cell_create(word init) {
  TestCell* c = new TestCell();
  c->w.store(init);
  return c;
}
inline void cell_destroy(TestCell* c) { delete c; }
inline word cell_load(TestCell* c) { return c->w.load(); }
inline bool cell_cas(TestCell* c, word e, word n) {
  word x = e;
  return c->w.compare_exchange_strong(x, n);
}

}  // namespace wfg
