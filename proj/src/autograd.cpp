#include "maskcast/autograd.hpp"

#include "maskcast/errors.hpp"
#include "maskcast/parallel.hpp"

#include <cassert>
#include <cmath>
#include <unordered_set>

namespace maskcast::nn {
namespace {

Value make_op(Tensor value, std::vector<Value> parents, std::function<void(Node &)> fn) {
	bool req = false;
	for (const auto &p : parents) {
		req = req || p->requires_grad;
	}
	auto node = std::make_shared<Node>(std::move(value), req);
	if (req) {
		node->parents = std::move(parents);
		node->backward_fn = std::move(fn);
	}
	return node;
}

} // namespace

Value make_parameter(Tensor v) { return std::make_shared<Node>(std::move(v), true); }

Value make_constant(Tensor v) { return std::make_shared<Node>(std::move(v), false); }

void backward(const Value &root) {
	assert(root->value.rows == 1 && root->value.cols == 1);
	// Iterative topological sort over the reachable grad-requiring subgraph.
	std::vector<Node *> order;
	std::unordered_set<Node *> visited;
	std::vector<std::pair<Node *, std::size_t>> stack;
	stack.emplace_back(root.get(), 0);
	visited.insert(root.get());
	while (!stack.empty()) {
		auto &[node, next] = stack.back();
		if (next < node->parents.size()) {
			Node *p = node->parents[next++].get();
			if (p->requires_grad && !visited.count(p)) {
				visited.insert(p);
				stack.emplace_back(p, 0);
			}
		} else {
			order.push_back(node);
			stack.pop_back();
		}
	}
	for (Node *n : order) {
		n->ensure_grad();
	}
	root->grad.fill(1.0f);
	for (auto it = order.rbegin(); it != order.rend(); ++it) {
		Node *n = *it;
		if (n->backward_fn) {
			n->backward_fn(*n);
		}
	}
}

Value matmul(const Value &a, const Value &b) {
	Tensor out(a->value.rows, b->value.cols);
	matmul_nn(a->value, b->value, out, false);
	return make_op(std::move(out), {a, b}, [](Node &n) {
		const Value &a = n.parents[0];
		const Value &b = n.parents[1];
		if (a->requires_grad) {
			a->ensure_grad();
			matmul_nt(n.grad, b->value, a->grad, true);
		}
		if (b->requires_grad) {
			b->ensure_grad();
			matmul_tn(a->value, n.grad, b->grad, true);
		}
	});
}

Value affine(const Value &x, const Value &w, const Value &b) {
	assert(b->value.rows == 1 && b->value.cols == w->value.cols);
	Tensor out(x->value.rows, w->value.cols);
	matmul_nn(x->value, w->value, out, false);
	const std::int64_t n = out.cols;
	for (std::int64_t i = 0; i < out.rows; ++i) {
		float *oi = out.row(i);
		const float *bv = b->value.data.data();
		for (std::int64_t j = 0; j < n; ++j) {
			oi[j] += bv[j];
		}
	}
	return make_op(std::move(out), {x, w, b}, [](Node &n) {
		const Value &x = n.parents[0];
		const Value &w = n.parents[1];
		const Value &b = n.parents[2];
		if (x->requires_grad) {
			x->ensure_grad();
			matmul_nt(n.grad, w->value, x->grad, true);
		}
		if (w->requires_grad) {
			w->ensure_grad();
			matmul_tn(x->value, n.grad, w->grad, true);
		}
		if (b->requires_grad) {
			b->ensure_grad();
			float *bg = b->grad.data.data();
			for (std::int64_t i = 0; i < n.grad.rows; ++i) {
				const float *gi = n.grad.row(i);
				for (std::int64_t j = 0; j < n.grad.cols; ++j) {
					bg[j] += gi[j];
				}
			}
		}
	});
}

namespace {

template <typename Fwd, typename Bwd>
Value elementwise2(const Value &a, const Value &b, Fwd fwd, Bwd bwd) {
	assert(a->value.same_shape(b->value));
	Tensor out(a->value.rows, a->value.cols);
	const std::size_t n = out.data.size();
	for (std::size_t i = 0; i < n; ++i) {
		out.data[i] = fwd(a->value.data[i], b->value.data[i]);
	}
	return make_op(std::move(out), {a, b}, [bwd](Node &n) {
		const Value &a = n.parents[0];
		const Value &b = n.parents[1];
		if (a->requires_grad) {
			a->ensure_grad();
		}
		if (b->requires_grad) {
			b->ensure_grad();
		}
		for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
			bwd(n.grad.data[i], a->value.data[i], b->value.data[i],
			    a->requires_grad ? &a->grad.data[i] : nullptr,
			    b->requires_grad ? &b->grad.data[i] : nullptr);
		}
	});
}

} // namespace

Value add(const Value &a, const Value &b) {
	return elementwise2(
	    a, b, [](float x, float y) { return x + y; },
	    [](float g, float, float, float *ga, float *gb) {
		    if (ga) {
			    *ga += g;
		    }
		    if (gb) {
			    *gb += g;
		    }
	    });
}

Value mul(const Value &a, const Value &b) {
	return elementwise2(
	    a, b, [](float x, float y) { return x * y; },
	    [](float g, float x, float y, float *ga, float *gb) {
		    if (ga) {
			    *ga += g * y;
		    }
		    if (gb) {
			    *gb += g * x;
		    }
	    });
}

Value sigmoid(const Value &a) {
	Tensor out(a->value.rows, a->value.cols);
	for (std::size_t i = 0; i < out.data.size(); ++i) {
		out.data[i] = 1.0f / (1.0f + std::exp(-a->value.data[i]));
	}
	return make_op(std::move(out), {a}, [](Node &n) {
		const Value &a = n.parents[0];
		a->ensure_grad();
		for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
			const float s = n.value.data[i];
			a->grad.data[i] += n.grad.data[i] * s * (1.0f - s);
		}
	});
}

Value tanh_op(const Value &a) {
	Tensor out(a->value.rows, a->value.cols);
	for (std::size_t i = 0; i < out.data.size(); ++i) {
		out.data[i] = std::tanh(a->value.data[i]);
	}
	return make_op(std::move(out), {a}, [](Node &n) {
		const Value &a = n.parents[0];
		a->ensure_grad();
		for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
			const float t = n.value.data[i];
			a->grad.data[i] += n.grad.data[i] * (1.0f - t * t);
		}
	});
}

Value relu(const Value &a) {
	Tensor out(a->value.rows, a->value.cols);
	for (std::size_t i = 0; i < out.data.size(); ++i) {
		out.data[i] = a->value.data[i] > 0.0f ? a->value.data[i] : 0.0f;
	}
	return make_op(std::move(out), {a}, [](Node &n) {
		const Value &a = n.parents[0];
		a->ensure_grad();
		for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
			if (a->value.data[i] > 0.0f) {
				a->grad.data[i] += n.grad.data[i];
			}
		}
	});
}

Value slice_cols(const Value &a, std::int64_t c0, std::int64_t c1) {
	assert(c0 >= 0 && c0 < c1 && c1 <= a->value.cols);
	Tensor out(a->value.rows, c1 - c0);
	for (std::int64_t i = 0; i < out.rows; ++i) {
		const float *ai = a->value.row(i) + c0;
		std::copy(ai, ai + out.cols, out.row(i));
	}
	return make_op(std::move(out), {a}, [c0](Node &n) {
		const Value &a = n.parents[0];
		a->ensure_grad();
		for (std::int64_t i = 0; i < n.grad.rows; ++i) {
			const float *gi = n.grad.row(i);
			float *gai = a->grad.row(i) + c0;
			for (std::int64_t j = 0; j < n.grad.cols; ++j) {
				gai[j] += gi[j];
			}
		}
	});
}

Value concat_cols(const std::vector<Value> &parts) {
	assert(!parts.empty());
	const std::int64_t rows = parts[0]->value.rows;
	std::int64_t cols = 0;
	for (const auto &p : parts) {
		assert(p->value.rows == rows);
		cols += p->value.cols;
	}
	Tensor out(rows, cols);
	std::int64_t off = 0;
	for (const auto &p : parts) {
		for (std::int64_t i = 0; i < rows; ++i) {
			std::copy(p->value.row(i), p->value.row(i) + p->value.cols, out.row(i) + off);
		}
		off += p->value.cols;
	}
	std::vector<Value> parents(parts.begin(), parts.end());
	return make_op(std::move(out), std::move(parents), [](Node &n) {
		std::int64_t off = 0;
		for (auto &p : n.parents) {
			if (p->requires_grad) {
				p->ensure_grad();
				for (std::int64_t i = 0; i < n.grad.rows; ++i) {
					const float *gi = n.grad.row(i) + off;
					float *gp = p->grad.row(i);
					for (std::int64_t j = 0; j < p->value.cols; ++j) {
						gp[j] += gi[j];
					}
				}
			}
			off += p->value.cols;
		}
	});
}

Value concat_rows(const std::vector<Value> &parts) {
	assert(!parts.empty());
	const std::int64_t cols = parts[0]->value.cols;
	std::int64_t rows = 0;
	for (const auto &p : parts) {
		assert(p->value.cols == cols);
		rows += p->value.rows;
	}
	Tensor out(rows, cols);
	std::int64_t off = 0;
	for (const auto &p : parts) {
		std::copy(p->value.data.begin(), p->value.data.end(), out.data.begin() + off);
		off += p->value.size();
	}
	std::vector<Value> parents(parts.begin(), parts.end());
	return make_op(std::move(out), std::move(parents), [](Node &n) {
		std::int64_t off = 0;
		for (auto &p : n.parents) {
			if (p->requires_grad) {
				p->ensure_grad();
				for (std::int64_t i = 0; i < p->value.size(); ++i) {
					p->grad.data[static_cast<std::size_t>(i)] +=
					    n.grad.data[static_cast<std::size_t>(off + i)];
				}
			}
			off += p->value.size();
		}
	});
}

Value gather_rows(const Value &a, std::vector<std::int64_t> rows) {
	Tensor out(static_cast<std::int64_t>(rows.size()), a->value.cols);
	for (std::size_t i = 0; i < rows.size(); ++i) {
		if (rows[i] >= 0) {
			std::copy(a->value.row(rows[i]), a->value.row(rows[i]) + a->value.cols,
			          out.row(static_cast<std::int64_t>(i)));
		} // negative index = zero row (causal padding)
	}
	return make_op(std::move(out), {a}, [rows = std::move(rows)](Node &n) {
		const Value &a = n.parents[0];
		a->ensure_grad();
		for (std::size_t i = 0; i < rows.size(); ++i) {
			if (rows[i] < 0) {
				continue;
			}
			const float *gi = n.grad.row(static_cast<std::int64_t>(i));
			float *ga = a->grad.row(rows[i]);
			for (std::int64_t j = 0; j < n.grad.cols; ++j) {
				ga[j] += gi[j];
			}
		}
	});
}

Value layer_norm(const Value &a, const Value &gain, const Value &bias, float eps) {
	const std::int64_t cols = a->value.cols;
	assert(gain->value.cols == cols && bias->value.cols == cols);
	Tensor out(a->value.rows, cols);
	auto xhat = std::make_shared<Tensor>(a->value.rows, cols);
	auto inv_sd = std::make_shared<std::vector<float>>(static_cast<std::size_t>(a->value.rows));
	for (std::int64_t i = 0; i < out.rows; ++i) {
		const float *ai = a->value.row(i);
		float mean = 0.0f;
		for (std::int64_t j = 0; j < cols; ++j) {
			mean += ai[j];
		}
		mean /= static_cast<float>(cols);
		float var = 0.0f;
		for (std::int64_t j = 0; j < cols; ++j) {
			const float d = ai[j] - mean;
			var += d * d;
		}
		var /= static_cast<float>(cols);
		const float isd = 1.0f / std::sqrt(var + eps);
		(*inv_sd)[static_cast<std::size_t>(i)] = isd;
		float *xh = xhat->row(i);
		float *oi = out.row(i);
		for (std::int64_t j = 0; j < cols; ++j) {
			xh[j] = (ai[j] - mean) * isd;
			oi[j] = xh[j] * gain->value.data[static_cast<std::size_t>(j)] +
			        bias->value.data[static_cast<std::size_t>(j)];
		}
	}
	return make_op(std::move(out), {a, gain, bias}, [xhat, inv_sd](Node &n) {
		const Value &a = n.parents[0];
		const Value &gain = n.parents[1];
		const Value &bias = n.parents[2];
		const std::int64_t cols = n.value.cols;
		if (gain->requires_grad) {
			gain->ensure_grad();
		}
		if (bias->requires_grad) {
			bias->ensure_grad();
		}
		if (a->requires_grad) {
			a->ensure_grad();
		}
		for (std::int64_t i = 0; i < n.grad.rows; ++i) {
			const float *g = n.grad.row(i);
			const float *xh = xhat->row(i);
			const float isd = (*inv_sd)[static_cast<std::size_t>(i)];
			if (gain->requires_grad) {
				for (std::int64_t j = 0; j < cols; ++j) {
					gain->grad.data[static_cast<std::size_t>(j)] += g[j] * xh[j];
				}
			}
			if (bias->requires_grad) {
				for (std::int64_t j = 0; j < cols; ++j) {
					bias->grad.data[static_cast<std::size_t>(j)] += g[j];
				}
			}
			if (a->requires_grad) {
				// dL/dxhat, then fold the mean/variance terms per row.
				float sum_dx = 0.0f, sum_dx_xh = 0.0f;
				for (std::int64_t j = 0; j < cols; ++j) {
					const float dxh = g[j] * gain->value.data[static_cast<std::size_t>(j)];
					sum_dx += dxh;
					sum_dx_xh += dxh * xh[j];
				}
				const float inv_n = 1.0f / static_cast<float>(cols);
				float *ga = a->grad.row(i);
				for (std::int64_t j = 0; j < cols; ++j) {
					const float dxh = g[j] * gain->value.data[static_cast<std::size_t>(j)];
					ga[j] += isd * (dxh - inv_n * sum_dx - xh[j] * inv_n * sum_dx_xh);
				}
			}
		}
	});
}

Value dropout(const Value &a, float p, Rng &rng, bool training) {
	if (!training || p <= 0.0f) {
		return a;
	}
	const float keep = 1.0f - p;
	auto mask = std::make_shared<std::vector<float>>(a->value.data.size());
	Tensor out(a->value.rows, a->value.cols);
	for (std::size_t i = 0; i < out.data.size(); ++i) {
		const float m = rng.uniform() < keep ? 1.0f / keep : 0.0f;
		(*mask)[i] = m;
		out.data[i] = a->value.data[i] * m;
	}
	return make_op(std::move(out), {a}, [mask](Node &n) {
		const Value &a = n.parents[0];
		a->ensure_grad();
		for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
			a->grad.data[i] += n.grad.data[i] * (*mask)[i];
		}
	});
}

Value embedding(const Value &table, const std::vector<std::int32_t> &idx) {
	const std::int64_t dim = table->value.cols;
	Tensor out(static_cast<std::int64_t>(idx.size()), dim);
	for (std::size_t i = 0; i < idx.size(); ++i) {
		assert(idx[i] >= 0 && idx[i] < table->value.rows);
		std::copy(table->value.row(idx[i]), table->value.row(idx[i]) + dim,
		          out.row(static_cast<std::int64_t>(i)));
	}
	return make_op(std::move(out), {table}, [idx](Node &n) {
		const Value &table = n.parents[0];
		table->ensure_grad();
		for (std::size_t i = 0; i < idx.size(); ++i) {
			const float *gi = n.grad.row(static_cast<std::int64_t>(i));
			float *gt = table->grad.row(idx[i]);
			for (std::int64_t j = 0; j < n.grad.cols; ++j) {
				gt[j] += gi[j];
			}
		}
	});
}

Value mean_all(const Value &a) {
	Tensor out(1, 1);
	double sum = 0.0;
	for (float v : a->value.data) {
		sum += v;
	}
	out.data[0] = static_cast<float>(sum / static_cast<double>(a->value.size()));
	return make_op(std::move(out), {a}, [](Node &n) {
		const Value &a = n.parents[0];
		a->ensure_grad();
		const float g = n.grad.data[0] / static_cast<float>(a->value.size());
		for (auto &v : a->grad.data) {
			v += g;
		}
	});
}

Value attention(const Value &q, const Value &k, const Value &v, std::int64_t batch,
                std::int64_t length, int heads) {
	const std::int64_t dim = q->value.cols;
	assert(dim % heads == 0);
	assert(q->value.rows == batch * length);
	const std::int64_t dh = dim / heads;
	const float scl = 1.0f / std::sqrt(static_cast<float>(dh));

	// Softmax scores kept for the backward pass: (batch*heads) blocks of (L,L).
	auto probs = std::make_shared<Tensor>(batch * heads * length, length);
	Tensor out(batch * length, dim);

	parallel_for(batch * heads, [&](std::int64_t b0, std::int64_t b1) {
		for (std::int64_t bh = b0; bh < b1; ++bh) {
			const std::int64_t b = bh / heads;
			const std::int64_t h = bh % heads;
			const std::int64_t row0 = b * length;
			const std::int64_t col0 = h * dh;
			for (std::int64_t i = 0; i < length; ++i) {
				const float *qi = q->value.row(row0 + i) + col0;
				float *si = probs->row(bh * length + i);
				float mx = -1e30f;
				for (std::int64_t j = 0; j < length; ++j) {
					const float *kj = k->value.row(row0 + j) + col0;
					float s = 0.0f;
					for (std::int64_t d = 0; d < dh; ++d) {
						s += qi[d] * kj[d];
					}
					si[j] = s * scl;
					mx = std::max(mx, si[j]);
				}
				float sum = 0.0f;
				for (std::int64_t j = 0; j < length; ++j) {
					si[j] = std::exp(si[j] - mx);
					sum += si[j];
				}
				const float inv = 1.0f / sum;
				float *oi = out.row(row0 + i) + col0;
				for (std::int64_t d = 0; d < dh; ++d) {
					oi[d] = 0.0f;
				}
				for (std::int64_t j = 0; j < length; ++j) {
					si[j] *= inv;
					const float *vj = v->value.row(row0 + j) + col0;
					const float p = si[j];
					for (std::int64_t d = 0; d < dh; ++d) {
						oi[d] += p * vj[d];
					}
				}
			}
		}
	});

	return make_op(std::move(out), {q, k, v}, [probs, batch, length, heads, dh, scl](Node &n) {
		const Value &q = n.parents[0];
		const Value &k = n.parents[1];
		const Value &v = n.parents[2];
		q->ensure_grad();
		k->ensure_grad();
		v->ensure_grad();
		parallel_for(batch * heads, [&](std::int64_t b0, std::int64_t b1) {
			std::vector<float> dp(static_cast<std::size_t>(length));
			for (std::int64_t bh = b0; bh < b1; ++bh) {
				const std::int64_t b = bh / heads;
				const std::int64_t h = bh % heads;
				const std::int64_t row0 = b * length;
				const std::int64_t col0 = h * dh;
				for (std::int64_t i = 0; i < length; ++i) {
					const float *gi = n.grad.row(row0 + i) + col0;
					const float *pi = probs->row(bh * length + i);
					// dV and dP
					float dot = 0.0f;
					for (std::int64_t j = 0; j < length; ++j) {
						const float *vj = v->value.row(row0 + j) + col0;
						float s = 0.0f;
						for (std::int64_t d = 0; d < dh; ++d) {
							s += gi[d] * vj[d];
						}
						dp[static_cast<std::size_t>(j)] = s;
						dot += s * pi[j];
						float *gv = v->grad.row(row0 + j) + col0;
						const float p = pi[j];
						for (std::int64_t d = 0; d < dh; ++d) {
							gv[d] += p * gi[d];
						}
					}
					// dS = P .* (dP - dot), then dQ += dS K, dK += dS^T Q
					const float *qi = q->value.row(row0 + i) + col0;
					float *gq = q->grad.row(row0 + i) + col0;
					for (std::int64_t j = 0; j < length; ++j) {
						const float ds = pi[j] * (dp[static_cast<std::size_t>(j)] - dot) * scl;
						const float *kj = k->value.row(row0 + j) + col0;
						float *gk = k->grad.row(row0 + j) + col0;
						for (std::int64_t d = 0; d < dh; ++d) {
							gq[d] += ds * kj[d];
							gk[d] += ds * qi[d];
						}
					}
				}
			}
		});
	});
}

Value quantile_loss(const Value &pred, const Tensor &target, const std::vector<float> &row_weight,
                    const std::vector<double> &taus) {
	const std::int64_t rows = pred->value.rows;
	const std::int64_t m = target.cols;
	const std::int64_t nq = static_cast<std::int64_t>(taus.size());
	assert(pred->value.cols == m * nq);
	assert(target.rows == rows);
	assert(static_cast<std::int64_t>(row_weight.size()) == rows);

	double weight_sum = 0.0;
	for (float w : row_weight) {
		weight_sum += w;
	}
	if (weight_sum <= 0.0) {
		throw UsageError("quantile loss: empty mask");
	}
	const double denom = weight_sum * static_cast<double>(m);

	double loss = 0.0;
	for (std::int64_t i = 0; i < rows; ++i) {
		const float w = row_weight[static_cast<std::size_t>(i)];
		if (w == 0.0f) {
			continue;
		}
		const float *pi = pred->value.row(i);
		const float *yi = target.row(i);
		for (std::int64_t vIdx = 0; vIdx < m; ++vIdx) {
			for (std::int64_t qIdx = 0; qIdx < nq; ++qIdx) {
				const double yhat = pi[vIdx * nq + qIdx];
				const double y = yi[vIdx];
				const double ind = y <= yhat ? 1.0 : 0.0;
				loss += static_cast<double>(w) * (yhat - y) * (ind - taus[static_cast<std::size_t>(qIdx)]);
			}
		}
	}
	Tensor out(1, 1);
	out.data[0] = static_cast<float>(loss / denom);

	auto weights = std::make_shared<std::vector<float>>(row_weight);
	auto tgt = std::make_shared<Tensor>(target);
	auto tq = std::make_shared<std::vector<double>>(taus);
	return make_op(std::move(out), {pred}, [weights, tgt, tq, denom, m, nq](Node &n) {
		const Value &pred = n.parents[0];
		pred->ensure_grad();
		const float g = n.grad.data[0] / static_cast<float>(denom);
		for (std::int64_t i = 0; i < pred->value.rows; ++i) {
			const float w = (*weights)[static_cast<std::size_t>(i)];
			if (w == 0.0f) {
				continue;
			}
			const float *pi = pred->value.row(i);
			const float *yi = tgt->row(i);
			float *gp = pred->grad.row(i);
			for (std::int64_t vIdx = 0; vIdx < m; ++vIdx) {
				for (std::int64_t qIdx = 0; qIdx < nq; ++qIdx) {
					const float yhat = pi[vIdx * nq + qIdx];
					const float y = yi[vIdx];
					const float ind = y <= yhat ? 1.0f : 0.0f;
					gp[vIdx * nq + qIdx] +=
					    g * w * (ind - static_cast<float>((*tq)[static_cast<std::size_t>(qIdx)]));
				}
			}
		}
	});
}

} // namespace maskcast::nn
