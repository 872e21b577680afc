//! One live optimization per session: a worker thread runs the solver, the
//! message handler stages changes in a mailbox that the worker applies
//! between iterations.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;

use base64::Engine;
use stylize_core::energies::{DevelopableParams, DevelopableStyle};
use stylize_core::mesh::{parse_obj, write_obj};
use stylize_core::style::{AxisSet, McfParams, NormalCaptureImage};
use stylize_core::{
    normalize_mesh, normalize_with_transform, Normalization, Regularization, Solver, SolverParams,
    StyleField, TargetSource, TriangleMesh, Vec3,
};
use tokio::sync::mpsc;

use crate::protocol::{ClientMessage, ErrorCode, Frame, ImagePatch, ServerMessage};

/// Default normal-capture canvas, equirectangular 2:1.
pub const CANVAS_WIDTH: usize = 256;
pub const CANVAS_HEIGHT: usize = 128;

/// Frames buffered per session before the worker starts dropping them.
const EVENT_BUFFER: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopState {
    Running,
    Paused,
    Converged,
}

/// What the worker publishes besides replies to requests.
#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    Frame(Frame),
    /// The loop stopped on a numerical failure and is paused.
    Failed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub iteration: usize,
    pub energy: f64,
    /// In the coordinates of the loaded OBJ.
    pub positions: Vec<Vec3>,
}

#[derive(Clone)]
enum Style {
    Field(StyleField),
    Developable,
}

impl Style {
    fn source(&self, developable: DevelopableParams) -> Arc<dyn TargetSource> {
        match self {
            Self::Field(f) => Arc::new(f.clone()),
            Self::Developable => Arc::new(DevelopableStyle(developable)),
        }
    }
}

struct Staged {
    params: SolverParams,
    source: Arc<dyn TargetSource>,
}

struct Mailbox {
    staged: Option<Staged>,
    reset: bool,
    state: LoopState,
    shutdown: bool,
    snapshot: Snapshot,
}

struct Shared {
    mailbox: Mutex<Mailbox>,
    wake: Condvar,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, Mailbox> {
        self.mailbox.lock().unwrap_or_else(|e| e.into_inner())
    }
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

pub struct Session {
    id: String,
    rest: TriangleMesh,
    frame: Normalization,
    params: SolverParams,
    developable: DevelopableParams,
    style: Style,
    canvas: Option<NormalCaptureImage>,
    shared: Arc<Shared>,
    events: Option<mpsc::Receiver<Event>>,
    worker: Option<JoinHandle<()>>,
}

type Reply = Result<ServerMessage, ServerMessage>;

fn bad(code: ErrorCode, e: impl ToString) -> ServerMessage {
    ServerMessage::error(code, e.to_string())
}

impl Session {
    /// Parses the OBJ and starts a paused loop with the sphere style.
    pub fn create(obj: &str) -> Result<Self, ServerMessage> {
        let input = parse_obj(obj, "load_mesh").map_err(|e| bad(ErrorCode::BadMesh, e))?;
        let (rest, frame) = normalize_with_transform(&input).map_err(|e| bad(ErrorCode::BadMesh, e))?;
        let params = SolverParams::default();
        let style = Style::Field(StyleField::AnalyticSphere);
        let developable = DevelopableParams::default();
        let solver = Solver::new(rest.clone(), style.source(developable), params)
            .map_err(|e| bad(ErrorCode::BadMesh, e))?;
        let shared = Arc::new(Shared {
            mailbox: Mutex::new(Mailbox {
                staged: None,
                reset: false,
                state: LoopState::Paused,
                shutdown: false,
                snapshot: Snapshot {
                    iteration: 0,
                    energy: solver.state().energy_history[0],
                    positions: input.positions().to_vec(),
                },
            }),
            wake: Condvar::new(),
        });
        let (tx, rx) = mpsc::channel(EVENT_BUFFER);
        let worker = {
            let shared = Arc::clone(&shared);
            std::thread::Builder::new()
                .name("stylize-session".into())
                .spawn(move || run_loop(solver, frame, shared, tx))
                .map_err(|e| bad(ErrorCode::BadMesh, e))?
        };
        Ok(Self {
            id: format!("s{:08x}", NEXT_ID.fetch_add(1, Ordering::Relaxed)),
            rest,
            frame,
            params,
            developable,
            style,
            canvas: None,
            shared,
            events: Some(rx),
            worker: Some(worker),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn vertex_count(&self) -> usize {
        self.rest.vertex_count()
    }

    pub fn face_count(&self) -> usize {
        self.rest.face_count()
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn created_message(&self) -> ServerMessage {
        ServerMessage::SessionCreated {
            session: self.id.clone(),
            vertices: self.vertex_count(),
            faces: self.face_count(),
        }
    }

    /// The receiving end of the frame channel; can be taken once.
    pub fn take_events(&mut self) -> Option<mpsc::Receiver<Event>> {
        self.events.take()
    }

    pub fn loop_state(&self) -> LoopState {
        self.shared.lock().state
    }

    pub fn snapshot(&self) -> Snapshot {
        self.shared.lock().snapshot.clone()
    }

    /// Handles every request except `load_mesh`.
    pub fn handle(&mut self, msg: ClientMessage) -> ServerMessage {
        let kind = msg.kind();
        let reply = match msg {
            ClientMessage::LoadMesh { .. } => Err(bad(
                ErrorCode::BadMesh,
                "load_mesh creates a new session and is handled by the connection",
            )),
            ClientMessage::SetStyle {
                style,
                obj,
                directions,
                image,
            } => self.set_style(&style, obj, directions, image),
            ClientMessage::SetParams {
                lambda,
                regularization,
                dynamic_targets,
                max_iterations,
                tolerance,
                crease_threshold,
            } => self.set_params(
                lambda,
                regularization,
                dynamic_targets,
                max_iterations,
                tolerance,
                crease_threshold,
            ),
            ClientMessage::PaintNormcap(patch) => self.paint(&patch),
            ClientMessage::Start => {
                self.control(|m| m.state = LoopState::Running);
                Ok(ServerMessage::ack(kind))
            }
            ClientMessage::Pause => {
                self.control(|m| m.state = LoopState::Paused);
                Ok(ServerMessage::ack(kind))
            }
            ClientMessage::Reset => {
                self.control(|m| {
                    m.reset = true;
                    m.state = LoopState::Paused;
                });
                Ok(ServerMessage::ack(kind))
            }
            ClientMessage::Export => self.export(),
        };
        reply.unwrap_or_else(|e| e)
    }

    fn control(&self, f: impl FnOnce(&mut Mailbox)) {
        f(&mut self.shared.lock());
        self.shared.wake.notify_all();
    }

    fn stage(&mut self, params: SolverParams, style: Style, developable: DevelopableParams) {
        let source = style.source(developable);
        self.params = params;
        self.style = style;
        self.developable = developable;
        self.control(|m| {
            m.staged = Some(Staged { params, source });
            // Changes re-arm a converged loop; a paused one stays paused.
            if m.state == LoopState::Converged {
                m.state = LoopState::Running;
            }
        });
    }

    fn set_style(
        &mut self,
        name: &str,
        obj: Option<String>,
        directions: Option<Vec<[f64; 3]>>,
        image: Option<ImagePatch>,
    ) -> Reply {
        let style_err = |e: stylize_core::Error| bad(ErrorCode::BadStyle, e);
        let mut params = self.params;
        let style = match name {
            "sphere" => Style::Field(StyleField::AnalyticSphere),
            "cube" => Style::Field(StyleField::axes(&AxisSet::Cube).map_err(style_err)?),
            "icosahedron" => Style::Field(StyleField::axes(&AxisSet::Icosahedron).map_err(style_err)?),
            "tetrahedron" => Style::Field(StyleField::axes(&AxisSet::Tetrahedron).map_err(style_err)?),
            "polytope" => {
                let dirs = directions
                    .ok_or_else(|| bad(ErrorCode::BadStyle, "polytope needs `directions`"))?
                    .into_iter()
                    .map(|[x, y, z]| Vec3::new(x, y, z))
                    .collect();
                Style::Field(StyleField::axes(&AxisSet::Polytope(dirs)).map_err(style_err)?)
            }
            "mesh" => {
                let text = obj.ok_or_else(|| bad(ErrorCode::BadStyle, "mesh needs `obj`"))?;
                let mesh = parse_obj(&text, "set_style").map_err(style_err)?;
                let mesh = normalize_mesh(&mesh).map_err(style_err)?;
                Style::Field(StyleField::from_style_mesh(&mesh, &McfParams::default()).map_err(style_err)?)
            }
            "normcap" => {
                if let Some(p) = image {
                    self.canvas = Some(decode_canvas(&p).map_err(|e| bad(ErrorCode::BadStyle, e))?);
                }
                let canvas = self.canvas.get_or_insert_with(default_canvas).clone();
                let field = StyleField::NormalCapture(canvas);
                check_lookups(&field, &self.rest, params.regularization).map_err(style_err)?;
                Style::Field(field)
            }
            "developable" => {
                params.regularization = Regularization::Farap;
                Style::Developable
            }
            "polycube" => {
                return Err(bad(
                    ErrorCode::BadStyle,
                    "polycube re-precomputes every iteration and is only available in batch mode",
                ))
            }
            other => return Err(bad(ErrorCode::BadStyle, format!("unknown style `{other}`"))),
        };
        self.stage(params, style, self.developable);
        Ok(ServerMessage::ack("set_style"))
    }

    #[allow(clippy::too_many_arguments)]
    fn set_params(
        &mut self,
        lambda: Option<f64>,
        regularization: Option<String>,
        dynamic_targets: Option<bool>,
        max_iterations: Option<usize>,
        tolerance: Option<f64>,
        crease_threshold: Option<f64>,
    ) -> Reply {
        let param_err = |e: stylize_core::Error| bad(ErrorCode::BadParams, e);
        let mut params = self.params;
        if let Some(l) = lambda {
            params.lambda = l;
        }
        if let Some(r) = regularization {
            params.regularization = r.parse().map_err(param_err)?;
        }
        if let Some(d) = dynamic_targets {
            params.dynamic_targets = d;
        }
        if let Some(n) = max_iterations {
            params.max_iterations = n;
        }
        if let Some(t) = tolerance {
            params.tolerance = t;
        }
        params.validate().map_err(param_err)?;
        let mut developable = self.developable;
        if let Some(t) = crease_threshold {
            developable.crease_threshold = t;
        }
        developable.validate().map_err(param_err)?;
        if matches!(self.style, Style::Developable) && params.regularization != Regularization::Farap {
            return Err(bad(ErrorCode::BadParams, "the developable style needs farap"));
        }
        self.stage(params, self.style.clone(), developable);
        Ok(ServerMessage::ack("set_params"))
    }

    fn paint(&mut self, patch: &ImagePatch) -> Reply {
        let pixels = base64::engine::general_purpose::STANDARD
            .decode(&patch.pixels)
            .map_err(|e| bad(ErrorCode::BadParams, format!("pixels: {e}")))?;
        let mut canvas = self.canvas.clone().unwrap_or_else(default_canvas);
        canvas
            .paint(patch.x, patch.y, patch.width, patch.height, &pixels)
            .map_err(|e| bad(ErrorCode::BadParams, e))?;
        let field = StyleField::NormalCapture(canvas.clone());
        check_lookups(&field, &self.rest, self.params.regularization)
            .map_err(|e| bad(ErrorCode::BadParams, e))?;
        self.canvas = Some(canvas);
        self.stage(self.params, Style::Field(field), self.developable);
        Ok(ServerMessage::ack("paint_normcap"))
    }

    fn export(&self) -> Reply {
        let snapshot = self.snapshot();
        let mesh = self.rest.with_positions(snapshot.positions);
        let mut out = Vec::new();
        write_obj(&mesh, &mut out).map_err(|e| bad(ErrorCode::BadParams, e))?;
        let obj = String::from_utf8(out).map_err(|e| bad(ErrorCode::BadParams, e))?;
        Ok(ServerMessage::Exported { obj })
    }

    /// Normalization applied to the loaded OBJ.
    pub fn normalization(&self) -> Normalization {
        self.frame
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        self.control(|m| m.shutdown = true);
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn default_canvas() -> NormalCaptureImage {
    NormalCaptureImage::identity(CANVAS_WIDTH, CANVAS_HEIGHT)
}

fn decode_canvas(p: &ImagePatch) -> Result<NormalCaptureImage, String> {
    let pixels = base64::engine::general_purpose::STANDARD
        .decode(&p.pixels)
        .map_err(|e| format!("pixels: {e}"))?;
    NormalCaptureImage::from_rgb(p.width, p.height, &pixels).map_err(|e| e.to_string())
}

/// Rejects canvases with undecodable pixels under the rest normals, so the
/// error reaches the sender instead of stopping the loop later.
fn check_lookups(field: &StyleField, rest: &TriangleMesh, reg: Regularization) -> stylize_core::Result<()> {
    field.targets(rest.positions(), rest.faces(), reg.mode()).map(|_| ())
}

fn frame_of(iteration: usize, energy: f64, positions: &[Vec3]) -> Frame {
    Frame {
        iteration: iteration.min(u32::MAX as usize) as u32,
        energy: energy as f32,
        positions: positions.iter().flat_map(|p| [p.x as f32, p.y as f32, p.z as f32]).collect(),
    }
}

fn run_loop(mut solver: Solver, frame: Normalization, shared: Arc<Shared>, events: mpsc::Sender<Event>) {
    let mut steps_since_change = 0usize;
    loop {
        let (staged, reset) = {
            let mut m = shared.lock();
            while !m.shutdown && m.staged.is_none() && !m.reset && m.state != LoopState::Running {
                m = shared.wake.wait(m).unwrap_or_else(|e| e.into_inner());
            }
            if m.shutdown {
                return;
            }
            (m.staged.take(), std::mem::take(&mut m.reset))
        };

        let mut publish_rest = false;
        if let Some(s) = staged {
            match solver.reconfigure(s.params, s.source) {
                Ok(()) => steps_since_change = 0,
                Err(e) => fail(&shared, &events, e.to_string()),
            }
        }
        if reset {
            match solver.reset() {
                Ok(()) => {
                    steps_since_change = 0;
                    publish_rest = true;
                }
                Err(e) => fail(&shared, &events, e.to_string()),
            }
        }
        if publish_rest {
            let energy = *solver.state().energy_history.last().unwrap_or(&0.0);
            publish(&shared, &events, &frame, 0, energy, solver.positions());
        }

        {
            // Anything that arrived while applying the last change goes first.
            let m = shared.lock();
            if m.state != LoopState::Running || m.staged.is_some() || m.reset {
                continue;
            }
        }
        match solver.step() {
            Ok(step) => {
                steps_since_change += 1;
                publish(&shared, &events, &frame, step.iteration, step.energy, solver.positions());
                if step.converged || steps_since_change >= solver.params().max_iterations {
                    let mut m = shared.lock();
                    // A change staged during the step re-arms the loop.
                    if m.state == LoopState::Running && m.staged.is_none() {
                        m.state = LoopState::Converged;
                    }
                }
            }
            Err(e) => fail(&shared, &events, e.to_string()),
        }
    }
}

fn fail(shared: &Shared, events: &mpsc::Sender<Event>, message: String) {
    log::warn!("session loop stopped: {message}");
    shared.lock().state = LoopState::Paused;
    let _ = events.try_send(Event::Failed(message));
}

fn publish(
    shared: &Shared,
    events: &mpsc::Sender<Event>,
    frame: &Normalization,
    iteration: usize,
    energy: f64,
    positions: &[Vec3],
) {
    let world: Vec<Vec3> = positions.iter().map(|p| frame.invert(p)).collect();
    let f = frame_of(iteration, energy, &world);
    shared.lock().snapshot = Snapshot {
        iteration,
        energy,
        positions: world,
    };
    // A slow reader loses intermediate frames; the snapshot stays current.
    let _ = events.try_send(Event::Frame(f));
}

/// Per-socket state: at most one session.
#[derive(Default)]
pub struct Connection {
    session: Option<Session>,
}

impl Connection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn session(&self) -> Option<&Session> {
        self.session.as_ref()
    }

    pub fn session_mut(&mut self) -> Option<&mut Session> {
        self.session.as_mut()
    }

    pub fn handle_text(&mut self, text: &str) -> ServerMessage {
        match crate::protocol::parse_client_message(text) {
            Ok(msg) => self.handle(msg),
            Err(reply) => reply,
        }
    }

    /// `load_mesh` replaces the current session; everything else needs one.
    pub fn handle(&mut self, msg: ClientMessage) -> ServerMessage {
        match msg {
            ClientMessage::LoadMesh { obj } => match Session::create(&obj) {
                Ok(s) => {
                    let reply = s.created_message();
                    self.session = Some(s);
                    reply
                }
                Err(e) => e,
            },
            other => match &mut self.session {
                Some(s) => s.handle(other),
                None => ServerMessage::error(ErrorCode::NoSession, "send load_mesh first"),
            },
        }
    }
}
