//! Command-line interface for the generating-function calculus.
//!
//! Exit codes: 0 success, 1 check failure (defect above tolerance),
//! 2 usage or parse error, 3 numeric failure (Newton, degeneracy, domain).

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "microgen",
    about = "Generating functions of symplectic micromorphisms: Hamilton-Jacobi series, star composition, flow recovery, and symmetry checks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct HamiltonianArgs {
    /// Hamiltonian expression, e.g. "p^2/2 + cos(q)"
    #[arg(long = "H")]
    hamiltonian: String,
    /// Momentum identifiers, comma separated (positional declaration)
    #[arg(long, default_value = "p")]
    p_vars: String,
    /// Position identifiers, comma separated
    #[arg(long, default_value = "q")]
    q_vars: String,
    /// Expansion base point of the position block, comma separated
    #[arg(long)]
    base: Option<String>,
    /// Treat the hamiltonian as explicitly time-dependent
    #[arg(long)]
    time_dependent: bool,
    /// Time identifier in time-dependent mode
    #[arg(long, default_value = "t")]
    t_var: String,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the evolution equation: emits S(t, p, Q) as jet JSON plus a
    /// residual report
    Hj {
        #[command(flatten)]
        ham: HamiltonianArgs,
        /// Time order of the series
        #[arg(long, default_value_t = 6)]
        order: usize,
        /// Space order of the series (default: max(order, 4))
        #[arg(long)]
        space_order: Option<usize>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Compose two generating functions (series and/or pointwise Newton)
    Compose {
        /// Generating function JSON for the inner factor F
        #[arg(long)]
        f_json: String,
        /// Generating function JSON for the outer factor G
        #[arg(long)]
        g_json: String,
        /// Series order; emits the composed generating function
        #[arg(long)]
        order: Option<usize>,
        /// Evaluation point "p1;x3" (components comma separated)
        #[arg(long)]
        at: Option<String>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        #[arg(long)]
        out: Option<String>,
    },
    /// Recover the flow from the evolution series and compare against the
    /// Runge-Kutta reference (CSV output)
    Flow {
        #[command(flatten)]
        ham: HamiltonianArgs,
        #[arg(long, default_value_t = 10)]
        order: usize,
        #[arg(long)]
        space_order: Option<usize>,
        /// Evolution time
        #[arg(long, default_value_t = 0.05)]
        t: f64,
        /// Initial phase point "p;q"
        #[arg(long, default_value = "0.3;0.4")]
        z: String,
        /// Reference integrator steps
        #[arg(long, default_value_t = 10000)]
        steps: usize,
        /// Integrate the textbook convention instead of the evolution one
        #[arg(long)]
        time_reversed: bool,
        #[arg(long)]
        out: Option<String>,
    },
    /// Cotangent lift of a core map with sampled relation points
    Lift {
        /// Core map components, semicolon separated expressions
        #[arg(long)]
        phi: String,
        /// Source variable identifiers, comma separated
        #[arg(long, default_value = "x")]
        x_vars: String,
        #[arg(long, default_value_t = 12)]
        order: usize,
        /// Sample points "p1;x2" (repeatable)
        #[arg(long)]
        at: Vec<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Fiber-graph decomposition of a generating function over a base point
    Decompose {
        #[arg(long)]
        f_json: String,
        /// Base point x2, comma separated
        #[arg(long)]
        x2: String,
        /// Fiber parameter grid: "start:stop:count" or "v1;v2;..."
        #[arg(long, default_value = "-1:1:10")]
        p1_grid: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Time-addition module axiom at fixed times (star of frozen series vs
    /// the directly frozen sum)
    CheckSemigroup {
        #[command(flatten)]
        ham: HamiltonianArgs,
        #[arg(long, default_value_t = 0.05)]
        t1: f64,
        #[arg(long, default_value_t = 0.05)]
        t2: f64,
        #[arg(long, default_value_t = 10)]
        order: usize,
        #[arg(long)]
        space_order: Option<usize>,
        /// Half-width of the evaluation grid
        #[arg(long, default_value_t = 0.5)]
        grid_max: f64,
        /// Grid points per axis
        #[arg(long, default_value_t = 5)]
        grid_n: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Check the core of an evolution-type generating function has the
    /// module form (U(q), q) and extract U
    CheckModuleCore {
        /// Build the generating function from a hamiltonian...
        #[arg(long = "H")]
        hamiltonian: Option<String>,
        /// ...or load it from JSON
        #[arg(long)]
        f_json: Option<String>,
        #[arg(long, default_value = "p")]
        p_vars: String,
        #[arg(long, default_value = "q")]
        q_vars: String,
        #[arg(long, default_value_t = 6)]
        order: usize,
        /// Sample points "q1;q2;..." (components comma separated)
        #[arg(long)]
        samples: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Associativity of the group-multiplication bracket over random
    /// algebra triples
    CheckMonoidGroup {
        /// Algebra: so3, sl2 or both
        #[arg(long, default_value = "both")]
        algebra: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Norm cap for the random elements
        #[arg(long, default_value_t = 0.1)]
        norm_cap: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, env = "MICROGEN_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// log(exp v exp w) for matrix Lie-algebra elements
    Bch {
        /// Row-major JSON matrix for v, e.g. "[[0,-0.1,0],[0.1,0,0],[0,0,0]]"
        #[arg(long)]
        v: Option<String>,
        /// Row-major JSON matrix for w
        #[arg(long)]
        w: Option<String>,
        /// Fixed algebra for coefficient input/output: so3 or sl2
        #[arg(long)]
        algebra: Option<String>,
        /// Basis coefficients for v, comma separated
        #[arg(long)]
        v_coeffs: Option<String>,
        /// Basis coefficients for w, comma separated
        #[arg(long)]
        w_coeffs: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Morse-Bott classification of a critical submanifold
    MorseBott {
        /// Function expression
        #[arg(long = "f")]
        function: String,
        /// Ambient variable identifiers (default: free variables of --f)
        #[arg(long)]
        vars: Option<String>,
        /// Critical submanifold parametrization, comma separated components
        #[arg(long = "C")]
        critical: String,
        /// Parameter identifiers of the parametrization (empty for a point)
        #[arg(long, default_value = "")]
        c_vars: String,
        /// Parameter samples "u1;u2;..." (components comma separated)
        #[arg(long)]
        samples: Option<String>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Isotropy certificates for the built-in relation suite
    LagrangianCheck {
        /// all, identity, lift-square, p2x, frozen-harmonic,
        /// frozen-pendulum, so3 or corrupted
        #[arg(long, default_value = "all")]
        case: String,
        #[arg(long, default_value_t = 1e-4)]
        h: f64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long, env = "MICROGEN_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            println!("{}", err.to_json());
            ExitCode::from(err.code())
        }
    }
}
