mod common;

use std::time::Duration;

use base64::Engine;
use common::{drain, frames, next_frame, obj_text, wait_until};
use stylize_core::mesh::{parse_obj, shapes};
use stylize_core::style::encode_normal;
use stylize_core::{TriangleMesh, Vec3};
use stylize_studio::session::{CANVAS_HEIGHT, CANVAS_WIDTH};
use stylize_studio::{ClientMessage, Connection, ErrorCode, ImagePatch, LoopState, ServerMessage};

fn code_of(reply: &ServerMessage) -> Option<ErrorCode> {
    match reply {
        ServerMessage::Error { code, .. } => Some(*code),
        _ => None,
    }
}

fn is_ack(reply: &ServerMessage) -> bool {
    matches!(reply, ServerMessage::Ack { .. })
}

fn load(conn: &mut Connection, mesh: &TriangleMesh) {
    let reply = conn.handle(ClientMessage::LoadMesh { obj: obj_text(mesh) });
    assert!(matches!(reply, ServerMessage::SessionCreated { .. }), "{reply:?}");
}

fn style(name: &str) -> ClientMessage {
    ClientMessage::SetStyle {
        style: name.into(),
        obj: None,
        directions: None,
        image: None,
    }
}

fn params(lambda: Option<f64>, regularization: Option<&str>) -> ClientMessage {
    ClientMessage::SetParams {
        lambda,
        regularization: regularization.map(String::from),
        dynamic_targets: None,
        max_iterations: None,
        tolerance: None,
        crease_threshold: None,
    }
}

fn send(conn: &mut Connection, msg: ClientMessage) -> ServerMessage {
    conn.handle(msg)
}

fn offset_mesh() -> TriangleMesh {
    shapes::bumpy_sphere(2, 0.1, 3.0).map_positions(|p| p * 2.5 + Vec3::new(3.0, -1.0, 0.5))
}

#[test]
fn load_mesh_echoes_counts() {
    let mesh = shapes::icosphere(2);
    let mut conn = Connection::new();
    match conn.handle_text(&serde_json::json!({"type": "load_mesh", "obj": obj_text(&mesh)}).to_string()) {
        ServerMessage::SessionCreated {
            session,
            vertices,
            faces,
        } => {
            assert!(!session.is_empty());
            assert_eq!(vertices, mesh.vertex_count());
            assert_eq!(faces, mesh.face_count());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn requests_without_a_session_are_rejected() {
    let mut conn = Connection::new();
    for msg in [style("cube"), params(Some(1.0), None), ClientMessage::Start, ClientMessage::Export] {
        assert_eq!(code_of(&conn.handle(msg)), Some(ErrorCode::NoSession));
    }
}

#[test]
fn malformed_requests_get_structured_errors() {
    let mut conn = Connection::new();
    let reply = conn.handle(ClientMessage::LoadMesh {
        obj: "v 0 0 0\nf 1 2 3\n".into(),
    });
    assert_eq!(code_of(&reply), Some(ErrorCode::BadMesh));
    assert!(conn.session().is_none());

    load(&mut conn, &shapes::icosphere(2));
    assert_eq!(code_of(&send(&mut conn, style("dodecahedron"))), Some(ErrorCode::BadStyle));
    assert_eq!(code_of(&send(&mut conn, style("polytope"))), Some(ErrorCode::BadStyle));
    assert_eq!(code_of(&send(&mut conn, style("polycube"))), Some(ErrorCode::BadStyle));
    let torus = ClientMessage::SetStyle {
        style: "mesh".into(),
        obj: Some(obj_text(&shapes::torus(2.0, 0.5, 16, 8))),
        directions: None,
        image: None,
    };
    assert_eq!(code_of(&send(&mut conn, torus)), Some(ErrorCode::BadStyle));
    assert_eq!(code_of(&send(&mut conn, params(Some(-1.0), None))), Some(ErrorCode::BadParams));
    assert_eq!(code_of(&send(&mut conn, params(None, Some("rigid")))), Some(ErrorCode::BadParams));
    assert_eq!(
        code_of(&conn.handle_text(r#"{"type":"set_params","lambda":"big"}"#)),
        Some(ErrorCode::BadParams)
    );
    let off_canvas = ClientMessage::PaintNormcap(ImagePatch {
        x: CANVAS_WIDTH,
        y: 0,
        width: 1,
        height: 1,
        pixels: base64::engine::general_purpose::STANDARD.encode([255, 128, 128]),
    });
    assert_eq!(code_of(&send(&mut conn, off_canvas)), Some(ErrorCode::BadParams));
    // Rejected requests leave the configuration alone.
    assert_eq!(conn.session().unwrap().params().lambda, 1.0);
}

#[test]
fn developable_style_needs_farap() {
    let mut conn = Connection::new();
    load(&mut conn, &shapes::icosphere(2));
    assert!(is_ack(&send(&mut conn, style("developable"))));
    assert_eq!(conn.session().unwrap().params().regularization.as_str(), "farap");
    assert_eq!(code_of(&send(&mut conn, params(None, Some("arap")))), Some(ErrorCode::BadParams));
    let mut rx = conn.session_mut().unwrap().take_events().unwrap();
    assert!(is_ack(&send(&mut conn, ClientMessage::Start)));
    for f in frames(&mut rx, 3) {
        assert!(f.positions.iter().all(|x| x.is_finite()));
    }
}

#[test]
fn zero_lambda_converges_to_the_input() {
    let mesh = offset_mesh();
    let mut conn = Connection::new();
    load(&mut conn, &mesh);
    let mut rx = conn.session_mut().unwrap().take_events().unwrap();
    assert!(is_ack(&send(&mut conn, style("cube"))));
    assert!(is_ack(&send(&mut conn, params(Some(0.0), None))));
    assert!(is_ack(&send(&mut conn, ClientMessage::Start)));
    let session = conn.session().unwrap();
    assert!(wait_until(Duration::from_secs(30), || session.loop_state() == LoopState::Converged));
    let last = drain(&mut rx).pop().expect("at least one frame");
    let snap = session.snapshot();
    for (k, p) in mesh.positions().iter().enumerate() {
        assert!((snap.positions[k] - p).norm() < 1e-5);
        let q = Vec3::new(
            last.positions[3 * k] as f64,
            last.positions[3 * k + 1] as f64,
            last.positions[3 * k + 2] as f64,
        );
        assert!((q - p).norm() < 1e-5, "{}", (q - p).norm());
    }
}

#[test]
fn style_swap_mid_run_warm_starts() {
    let mesh = shapes::bumpy_sphere(2, 0.1, 3.0);
    let mut conn = Connection::new();
    load(&mut conn, &mesh);
    let mut rx = conn.session_mut().unwrap().take_events().unwrap();
    assert!(is_ack(&send(&mut conn, ClientMessage::Start)));
    // The sphere style converges at once, so the swap also re-arms the loop.
    let before = frames(&mut rx, 1);
    assert!(is_ack(&send(&mut conn, style("cube"))));
    let session = conn.session().unwrap();
    assert!(wait_until(Duration::from_secs(60), || session.loop_state() == LoopState::Converged));
    let after = drain(&mut rx);
    let all: Vec<_> = before.iter().chain(&after).collect();

    for f in &all {
        assert_eq!(f.vertex_count(), mesh.vertex_count());
        assert!(f.energy.is_finite());
        assert!(f.positions.iter().all(|x| x.is_finite()));
    }
    // One frame per iteration, numbering continues across the swap.
    for w in all.windows(2) {
        assert!(w[1].iteration > w[0].iteration);
    }
    // The sphere style is satisfied at rest, so the first frame with energy
    // is the first one under cube targets.
    let swap = all.iter().position(|f| f.energy > 1e-6).expect("cube targets reached the loop");
    assert!(all[swap].iteration > 1);
    for w in all[swap..].windows(2) {
        assert!(
            w[1].energy <= w[0].energy * (1.0 + 1e-5),
            "{} -> {} at iteration {}",
            w[0].energy,
            w[1].energy,
            w[1].iteration
        );
    }
    assert!(all.last().unwrap().energy < all[swap].energy);
}

#[test]
fn paused_exports_are_stable() {
    let mesh = offset_mesh();
    let mut conn = Connection::new();
    load(&mut conn, &mesh);
    let mut rx = conn.session_mut().unwrap().take_events().unwrap();
    send(&mut conn, style("icosahedron"));
    send(&mut conn, params(Some(3.0), Some("acap")));
    send(&mut conn, ClientMessage::Start);
    frames(&mut rx, 5);
    assert!(is_ack(&send(&mut conn, ClientMessage::Pause)));
    drain(&mut rx);
    let a = send(&mut conn, ClientMessage::Export);
    std::thread::sleep(Duration::from_millis(100));
    let b = send(&mut conn, ClientMessage::Export);
    assert_eq!(a, b);
    let ServerMessage::Exported { obj } = a else {
        panic!("{a:?}")
    };
    let exported = parse_obj(&obj, "export").unwrap();
    assert_eq!(exported.faces(), mesh.faces());
    let moved = exported
        .positions()
        .iter()
        .zip(mesh.positions())
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max);
    assert!(moved > 1e-3, "the exported shape is the deformed one");
}

#[test]
fn reset_returns_to_the_input() {
    let mesh = offset_mesh();
    let mut conn = Connection::new();
    load(&mut conn, &mesh);
    let mut rx = conn.session_mut().unwrap().take_events().unwrap();
    send(&mut conn, style("cube"));
    send(&mut conn, ClientMessage::Start);
    frames(&mut rx, 4);
    assert!(is_ack(&send(&mut conn, ClientMessage::Reset)));
    let session = conn.session().unwrap();
    assert!(wait_until(Duration::from_secs(10), || session.snapshot().iteration == 0));
    assert_eq!(session.loop_state(), LoopState::Paused);
    let snap = session.snapshot();
    // The session saw the mesh through its OBJ text.
    let loaded = parse_obj(&obj_text(&mesh), "input").unwrap();
    for (p, q) in snap.positions.iter().zip(loaded.positions()) {
        assert!((p - q).norm() < 1e-9, "{}", (p - q).norm());
    }
    let rest = drain(&mut rx).pop().expect("reset publishes the rest shape");
    assert_eq!(rest.iteration, 0);
}

#[test]
fn painting_the_canvas_drives_the_targets() {
    let mesh = shapes::icosphere(2);
    let mut conn = Connection::new();
    load(&mut conn, &mesh);
    let mut rx = conn.session_mut().unwrap().take_events().unwrap();

    let gray = vec![128u8; CANVAS_WIDTH * CANVAS_HEIGHT * 3];
    let patch = |rgb: &[u8]| {
        ClientMessage::PaintNormcap(ImagePatch {
            x: 0,
            y: 0,
            width: CANVAS_WIDTH,
            height: CANVAS_HEIGHT,
            pixels: base64::engine::general_purpose::STANDARD.encode(rgb),
        })
    };
    // Mid-gray decodes to a near-zero normal.
    assert_eq!(code_of(&send(&mut conn, patch(&gray))), Some(ErrorCode::BadParams));

    let plus_x: Vec<u8> = std::iter::repeat_n(encode_normal(&Vec3::x()), CANVAS_WIDTH * CANVAS_HEIGHT)
        .flatten()
        .collect();
    assert!(is_ack(&send(&mut conn, patch(&plus_x))));
    assert!(is_ack(&send(&mut conn, params(Some(4.0), None))));
    send(&mut conn, ClientMessage::Start);
    let fs = frames(&mut rx, 10);
    assert!(fs[0].energy > 1.0);
    assert!(fs[9].energy < fs[0].energy, "{:?}", fs.iter().map(|f| (f.iteration, f.energy)).collect::<Vec<_>>());
}

#[test]
fn sessions_run_concurrently() {
    let mut a = Connection::new();
    let mut b = Connection::new();
    load(&mut a, &shapes::icosphere(2));
    load(&mut b, &shapes::bumpy_sphere(2, 0.1, 3.0));
    assert_ne!(a.session().unwrap().id(), b.session().unwrap().id());
    let mut ra = a.session_mut().unwrap().take_events().unwrap();
    let mut rb = b.session_mut().unwrap().take_events().unwrap();
    for c in [&mut a, &mut b] {
        send(c, style("tetrahedron"));
        send(c, ClientMessage::Start);
    }
    let fa = next_frame(&mut ra, Duration::from_secs(20)).unwrap();
    let fb = next_frame(&mut rb, Duration::from_secs(20)).unwrap();
    assert_eq!(fa.vertex_count(), 162);
    assert_eq!(fb.vertex_count(), 162);
    // Dropping a connection stops its worker without affecting the other.
    drop(a);
    assert!(next_frame(&mut rb, Duration::from_secs(20)).is_some());
}
